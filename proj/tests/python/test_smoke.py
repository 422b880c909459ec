import math

import pytest

import protostream as ps


def test_closed_forms():
    assert ps.log_uniform_density(3) == pytest.approx(-math.log(4 * math.pi), abs=1e-12)
    assert ps.vmf_concentration(1.0, 1, 3) == 0.0
    assert ps.vmf_concentration(1.6, 2, 3) == pytest.approx(1.7481481481481481, abs=1e-12)


def test_threshold_and_matching():
    tau, ba = ps.optimize_balanced_threshold([0.9, 0.8], [0.1, 0.2])
    assert tau == pytest.approx(0.5)
    assert ba == 1.0
    rows, total = ps.hungarian_assign([[5, 1, 1], [1, 5, 1]])
    assert rows == [0, 1]
    assert total == 10.0


def test_errors_are_translated():
    with pytest.raises(ps.ProtostreamError, match="InvalidArgument|EmptyInput"):
        ps.optimize_balanced_threshold([], [1.0])


def test_end_to_end():
    bench = ps.generate_benchmark(
        d=16, num_base_classes=4, num_novel_classes=4, kappa_true=50.0,
        samples_per_class_support=60, samples_per_class_stream=60, seed=3,
        mean_direction_scheme="uniform-random",
    )
    artifact = ps.calibrate(bench["support_features"], bench["support_labels"], seed=0)
    assert artifact["config"]["d"] == 16
    traces, snapshot = ps.run_stream(artifact, bench["stream_features"])
    assert len(traces) == len(bench["stream_features"])
    assert snapshot["k_total"] == 4 + snapshot["create_events"]
    report = ps.evaluate([t["label"] for t in traces], bench["stream_labels"], [0, 1, 2, 3], 8)
    assert 0.0 <= report["strict"]["all"] <= report["greedy"]["all"] <= 1.0
    again, _ = ps.run_stream(artifact, bench["stream_features"])
    assert again == traces
