import json

import pytest

import semitc

TINY = {
    "sampling": {"method": "fixed", "l": 5},
    "copies": 2,
    "pretrain_epochs": 1,
    "retrain_epochs": 2,
    "batch_size": 16,
    "seed": 3,
}


@pytest.fixture(scope="module")
def flows():
    return semitc.synthesize(classes=2, flows_per_class=4, seed=9)


def test_synthesize_is_labeled_and_deterministic(flows):
    again = semitc.synthesize(classes=2, flows_per_class=4, seed=9)
    assert [f.packets for f in flows] == [f.packets for f in again]
    assert semitc.label_set(flows) == ["c0", "c1"]
    assert all(len(f) >= 100 for f in flows)


def test_stat_features_single_packet():
    flow = semitc.Flow("one", [(0.0, 100)])
    stats = dict(zip(semitc.stat_feature_names(), semitc.stat_features(flow)))
    assert len(stats) == 24
    assert stats["f_fwd_len_min"] == 100.0
    assert stats["f_bwd_len_max"] == 0.0


def test_invalid_flow_raises():
    with pytest.raises(semitc.DataError):
        semitc.Flow("bad", [(0.0, -10)])


def test_sample_indices_examples():
    assert semitc.sample_indices("incremental", "2,2,3", 0, 100, 7) == [0, 2, 4, 8, 12, 16, 24]
    assert semitc.sample_indices("random", "1", 0, 100, 45) == list(range(45))
    with pytest.raises(semitc.ConfigError):
        semitc.sample_indices("fixed", "0", 0, 10, 5)


def test_config_rejects_unknown_field(flows):
    with pytest.raises(semitc.ConfigError):
        semitc.pretrain(flows, {"epochs": 3})


def test_pipeline_round_trip(flows, tmp_path):
    pre = semitc.pretrain(flows, TINY)
    assert pre.kind == "regressor"
    assert len(pre.loss_history) == 1
    clf = semitc.retrain(pre, flows, ["c0", "c1"], TINY)
    assert clf.kind == "classifier" and clf.transferred
    label, votes = semitc.classify(clf, flows[0])
    assert label in ("c0", "c1") and len(votes) == 2

    report = semitc.evaluate(clf, flows)
    assert report["n_flows"] == len(flows)
    assert report["n_sampled"] == 2 * len(flows)
    recalls = [m["recall"] for m in report["per_class"].values()]
    assert report["macro_accuracy"] == pytest.approx(sum(recalls) / len(recalls))

    path = tmp_path / "clf.ckpt"
    clf.save(str(path))
    loaded = semitc.load_model(str(path))
    assert loaded.to_json() == clf.to_json()
    assert json.loads(path.read_text())["kind"] == "classifier"


def test_baseline_is_not_transferred(flows):
    model = semitc.train_baseline(flows, ["c0", "c1"], TINY)
    assert not model.transferred


def test_split_and_knn(flows):
    train, test = semitc.split_per_class(flows, 2, seed=1)
    assert len(train) == 4 and len(test) == 4
    assert not {f.id for f in train} & {f.id for f in test}
    report = semitc.knn_evaluate(train, test, k=1)
    assert 0.0 <= report["macro_accuracy"] <= 1.0
    assert semitc.knn_leave_one_out(flows, k=1) >= 0.5


def test_flow_file_round_trip(flows, tmp_path):
    path = str(tmp_path / "flows.jsonl")
    semitc.write_flows(path, flows)
    back = semitc.read_flows(path)
    assert [f.id for f in back] == [f.id for f in flows]
    assert back[0].packets == flows[0].packets


def test_missing_model_raises_data_error(tmp_path):
    with pytest.raises(semitc.DataError, match="missing.ckpt"):
        semitc.load_model(str(tmp_path / "missing.ckpt"))


def test_gradcheck_passes():
    results = semitc.gradcheck(seeds=2)
    assert results and all(r["passed"] for r in results)
