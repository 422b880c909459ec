#include "protostream/error.hpp"

namespace protostream {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::NoNovelPrototypes: return "NoNovelPrototypes";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::BadVersion: return "BadVersion";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::UnlabeledSupport: return "UnlabeledSupport";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace protostream
