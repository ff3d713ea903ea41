import pytest

import xssguard


@pytest.fixture(scope="module")
def data():
    return xssguard.generate(seed=42)


def test_generate_is_balanced_and_reproducible(data):
    assert len(data) == 460
    assert data.count("Yes") == 230
    assert data.to_csv() == xssguard.generate(seed=42).to_csv()
    assert data.to_csv().count("\n") == 461


def test_csv_round_trip(data, tmp_path):
    path = tmp_path / "d.csv"
    data.write_csv(path)
    assert xssguard.read_csv(path) == data
    assert xssguard.parse_csv(data.to_csv()) == data


def test_rank_puts_api_name_first(data):
    for method in ("ig", "gr", "relieff"):
        ranking = xssguard.rank(data, method)
        assert ranking[0][0] == "api_name"
        assert len(ranking) == len(xssguard.FEATURES)


def test_train_score_and_reload(data, tmp_path):
    model = xssguard.train(data, "j48")
    row = data.rows()[0]
    assert 0.0 <= model.score(row) <= 1.0
    assert model.predict(row) in ("Yes", "No")
    path = tmp_path / "m.json"
    model.save(path)
    back = xssguard.Model.load(path)
    assert back.kind == "J48"
    assert back.score(row) == model.score(row)


def test_evaluate_report(data):
    report = xssguard.evaluate(data, ["nb", "j48"], k=5)
    assert [c["classifier"] for c in report["classifiers"]] == ["NaiveBayes", "J48"]
    assert report["k"] == 5


def test_metrics_and_auc():
    m = xssguard.metrics(50, 40, 5, 5)
    assert m["accuracy"] == 0.9
    assert xssguard.metrics(0, 90, 0, 10)["f_measure"] == 0.0
    assert xssguard.auc([0.9, 0.8, 0.7, 0.1], [True, False, True, False]) == 0.75


def test_replay(data, tmp_path):
    model = xssguard.train(data, "nb")
    scenario = tmp_path / "s.jsonl"
    xssguard.write_scenario(data, scenario)
    records = xssguard.replay(scenario, model, "always_block")
    assert len(records) == 460
    assert {r["verdict"] for r in records} <= {"Allow", "Block"}


def test_errors_map_to_python_exceptions(data):
    with pytest.raises(ValueError):
        xssguard.train(data, "knn")
    with pytest.raises(ValueError):
        xssguard.parse_csv("app_name\n")
