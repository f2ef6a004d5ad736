import dataclasses

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from shrimpmorph.discriminator import Kind, train_classifier
from shrimpmorph.errors import AlreadyResolved, CorruptRecord, NotFound
from shrimpmorph.pipeline.cli import main as cli_main
from shrimpmorph.pipeline.service import (
    AWAITING_REVIEW,
    COMPLETED,
    FAILED,
    ModelBundle,
    PipelineService,
    create_app,
    run_pipeline,
)
from shrimpmorph.pipeline.store import EventLog, encode_event
from shrimpmorph.posenet import desk_config, new_model
from shrimpmorph.regression import RegressionModel, SvrHyper
from shrimpmorph.skeleton import VARIABLE_NAMES, RostrumState, View
from shrimpmorph.synth import LabelNoise, SynthParams, generate_corpus

CLEAN = SynthParams(seed=300, label_noise=LabelNoise(0.0, 0.0))


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(CLEAN, 40)


@pytest.fixture(scope="module")
def bundle(corpus):
    disc_pose = train_classifier(
        Kind.POSE, [(r.raster, r.gt_view is View.LATERAL) for r in corpus], seed=0
    )
    disc_rostrum = train_classifier(
        Kind.ROSTRUM, [(r.raster, r.gt_rostrum is RostrumState.INTACT) for r in corpus], seed=0
    )
    registry = {
        (view, rostrum): new_model(
            desk_config(num_keypoints=23 if rostrum is RostrumState.INTACT else 22, seed=1)
        )
        for view in View
        for rostrum in RostrumState
    }
    regression = {
        name: RegressionModel(name, alpha=0.1, beta=0.0, hyper=SvrHyper(), n_train=40)
        for name in VARIABLE_NAMES
    }
    return ModelBundle(
        disc_pose=disc_pose,
        disc_rostrum=disc_rostrum,
        pose_registry=registry,
        regression=regression,
    )


def accurate_sample(corpus, bundle):
    """A sample where the classifiers agree with the clean human labels."""
    from shrimpmorph.discriminator import predict

    for rec in corpus:
        ok_pose = predict(bundle.disc_pose, rec.raster).value == (rec.gt_view is View.LATERAL)
        ok_ros = predict(bundle.disc_rostrum, rec.raster).value == (
            rec.gt_rostrum is RostrumState.INTACT
        )
        if ok_pose and ok_ros:
            return rec
    pytest.fail("no agreement sample in corpus")


def disagreeing_sample(corpus, bundle):
    rec = accurate_sample(corpus, bundle)
    flipped = View.DORSAL if rec.human_view is View.LATERAL else View.LATERAL
    return dataclasses.replace(rec, human_view=flipped)


# --- event log -----------------------------------------------------------------


def test_event_log_round_trip(tmp_path):
    log = EventLog(tmp_path / "store.jsonl")
    events = [{"event": "a", "n": 1}, {"event": "b", "s": "x"}]
    for e in events:
        log.append(e)
    assert log.read_all() == events


def test_event_log_serialization_is_canonical():
    assert encode_event({"b": 1, "a": 2}) == b'{"a":2,"b":1}\n'


def test_event_log_ignores_torn_tail(tmp_path, caplog):
    path = tmp_path / "store.jsonl"
    log = EventLog(path)
    log.append({"event": "a"})
    with open(path, "ab") as f:
        f.write(b'{"event":"partial"')  # no newline: torn write
    with caplog.at_level("WARNING"):
        assert log.read_all() == [{"event": "a"}]
    assert "partial trailing record" in caplog.text


def test_event_log_raises_on_interior_corruption(tmp_path):
    path = tmp_path / "store.jsonl"
    log = EventLog(path)
    log.append({"event": "a"})
    with open(path, "ab") as f:
        f.write(b"garbage line\n")
    log.append({"event": "b"})
    with pytest.raises(CorruptRecord):
        log.read_all()


def test_event_log_missing_file_is_empty(tmp_path):
    assert EventLog(tmp_path / "nope.jsonl").read_all() == []


# --- single-sample pipeline -------------------------------------------------------


def test_agreement_produces_complete_result(corpus, bundle):
    rec = accurate_sample(corpus, bundle)
    result, alerts = run_pipeline(rec, bundle)
    assert result.status == COMPLETED
    assert alerts == []
    assert result.skeleton is not None
    assert result.skeleton.view is rec.gt_view
    assert result.skeleton.rostrum is rec.gt_rostrum
    assert result.measurements_px is not None
    assert result.measurements_cm is not None
    # cm values follow the identity-slope stub regression
    for name, px in result.measurements_px.values.items():
        assert result.measurements_cm.values[name] == pytest.approx(max(px * 0.1, 0.0))


def test_disagreement_blocks_pose_inference(corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    result, alerts = run_pipeline(rec, bundle)
    assert result.status == AWAITING_REVIEW
    assert result.skeleton is None
    assert result.measurements_px is None and result.measurements_cm is None
    assert len(alerts) == 1
    assert alerts[0].alert_id == f"{rec.sample_id}:pose"
    assert alerts[0].human_value != alerts[0].ai_value


def test_resolution_overrides_human_value(corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    # resolving in favor of the (correct) AI value completes the sample
    correct = rec.gt_view is View.LATERAL
    result, alerts = run_pipeline(rec, bundle, resolutions={Kind.POSE: correct})
    assert result.status == COMPLETED
    assert alerts == []
    assert result.skeleton.view is rec.gt_view


def test_missing_pose_variant_fails_cleanly(corpus, bundle):
    rec = accurate_sample(corpus, bundle)
    partial = dataclasses.replace(
        bundle,
        pose_registry={
            k: v for k, v in bundle.pose_registry.items() if k != (rec.gt_view, rec.gt_rostrum)
        },
    )
    result, _ = run_pipeline(rec, partial)
    assert result.status == FAILED
    assert "MissingVariant" in result.failure_reason


# --- stateful service ---------------------------------------------------------------


def make_service(bundle, corpus, path, clock=lambda: 1000.0):
    service = PipelineService(bundle, path, clock=clock)
    service.add_samples(corpus)
    return service


def test_service_flow_and_replay(tmp_path, corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    samples = [rec] + [r for r in corpus[:6] if r.sample_id != rec.sample_id]
    store = tmp_path / "store.jsonl"
    service = make_service(bundle, samples, store)
    service.process_all()

    open_ids = [a.alert_id for a in service.open_alerts()]
    assert f"{rec.sample_id}:pose" in open_ids
    assert service.results[rec.sample_id].status == AWAITING_REVIEW

    # replay from the log alone reproduces results and alerts
    replayed = PipelineService(bundle, store)
    assert set(replayed.results) == set(service.results)
    assert {a.alert_id for a in replayed.open_alerts()} == set(open_ids)
    for sid, r in service.results.items():
        assert replayed.results[sid].status == r.status


def test_resolving_alert_reprocesses_sample(tmp_path, corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    service = make_service(bundle, [rec], tmp_path / "store.jsonl")
    service.process_all()
    alert_id = f"{rec.sample_id}:pose"
    correct = rec.gt_view is View.LATERAL

    alert = service.resolve_alert(alert_id, correct, "reviewer-1")
    assert alert.resolution.resolved_value is correct
    assert service.results[rec.sample_id].status == COMPLETED
    assert service.results[rec.sample_id].skeleton.view is rec.gt_view
    assert service.open_alerts() == []

    with pytest.raises(AlreadyResolved):
        service.resolve_alert(alert_id, not correct, "reviewer-2")
    with pytest.raises(NotFound):
        service.resolve_alert("nope:pose", True, "reviewer-1")


def test_store_bytes_are_deterministic(tmp_path, corpus, bundle):
    samples = corpus[:8]
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in paths:
        make_service(bundle, samples, path).process_all()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_truncated_store_recovers(tmp_path, corpus, bundle):
    store = tmp_path / "store.jsonl"
    service = make_service(bundle, corpus[:4], store)
    service.process_all()
    n_results = len(service.results)
    with open(store, "ab") as f:
        f.write(b'{"event":"result","data":{')  # torn final write
    recovered = PipelineService(bundle, store)
    assert len(recovered.results) == n_results


def test_summary_counts(tmp_path, corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    samples = [rec] + [r for r in corpus[:4] if r.sample_id != rec.sample_id]
    service = make_service(bundle, samples, tmp_path / "store.jsonl")
    service.process_all()
    s = service.summary()
    assert s["samples"] == len(samples)
    assert s["processed"] == len(samples)
    assert s["by_status"][AWAITING_REVIEW] >= 1
    assert s["alerts_open"] >= 1


def test_unknown_sample_raises(tmp_path, bundle):
    service = PipelineService(bundle, tmp_path / "store.jsonl")
    with pytest.raises(NotFound):
        service.process("missing")


# --- HTTP API ------------------------------------------------------------------------


@pytest.fixture()
def client(tmp_path, corpus, bundle):
    rec = disagreeing_sample(corpus, bundle)
    samples = [rec] + [r for r in corpus[:4] if r.sample_id != rec.sample_id]
    service = make_service(bundle, samples, tmp_path / "store.jsonl")
    service.process_all()
    return TestClient(create_app(service)), rec


def test_api_alert_listing_and_filters(client):
    http, rec = client
    open_alerts = http.get("/api/alerts").json()["alerts"]
    assert any(a["alert_id"] == f"{rec.sample_id}:pose" for a in open_alerts)
    all_alerts = http.get("/api/alerts", params={"status": "all"}).json()["alerts"]
    assert len(all_alerts) >= len(open_alerts)
    assert http.get("/api/alerts", params={"status": "bogus"}).status_code == 422


def test_api_alert_detail_and_404(client):
    http, rec = client
    alert_id = f"{rec.sample_id}:pose"
    doc = http.get(f"/api/alerts/{alert_id}").json()
    assert doc["sample_id"] == rec.sample_id and doc["resolution"] is None
    assert http.get("/api/alerts/nope:pose").status_code == 404


def test_api_resolve_flow_and_conflict(client):
    http, rec = client
    alert_id = f"{rec.sample_id}:pose"
    correct = rec.gt_view is View.LATERAL

    before = http.get(f"/api/samples/{rec.sample_id}/result").json()
    assert before["status"] == AWAITING_REVIEW

    r = http.post(f"/api/alerts/{alert_id}/resolve", json={"resolved_value": correct})
    assert r.status_code == 200
    assert r.json()["resolution"]["resolved_value"] is correct

    after = http.get(f"/api/samples/{rec.sample_id}/result").json()
    assert after["status"] == COMPLETED
    assert after["skeleton"]["view"] == rec.gt_view.value

    again = http.post(f"/api/alerts/{alert_id}/resolve", json={"resolved_value": not correct})
    assert again.status_code == 409
    missing = http.post("/api/alerts/nope:pose/resolve", json={"resolved_value": True})
    assert missing.status_code == 404


def test_api_image_and_summary(client):
    http, rec = client
    img = http.get(f"/api/samples/{rec.sample_id}/image")
    assert img.status_code == 200
    assert img.content.startswith(b"P6\n")
    assert http.get("/api/samples/ghost/image").status_code == 404
    assert http.get("/api/samples/ghost/result").status_code == 404
    summary = http.get("/api/metrics/summary").json()
    assert {"samples", "processed", "by_status", "alerts_total", "alerts_open"} <= set(summary)


# --- CLI -----------------------------------------------------------------------------


def test_cli_synth_and_regression_round_trip(tmp_path):
    runner = CliRunner()
    corpus_dir = tmp_path / "corpus"
    models_dir = tmp_path / "models"
    r = runner.invoke(
        cli_main,
        ["synth", "--out", str(corpus_dir), "--n", "12", "--seed", "5", "-c", "rotations=[0]"],
    )
    assert r.exit_code == 0, r.output
    assert any(corpus_dir.iterdir())

    r = runner.invoke(cli_main, ["fit-regression", "--corpus", str(corpus_dir), "--models", str(models_dir)])
    assert r.exit_code == 0, r.output
    assert (models_dir / "regression.tsv").exists()


def test_cli_rejects_unknown_config_key(tmp_path):
    runner = CliRunner()
    r = runner.invoke(cli_main, ["synth", "--out", str(tmp_path / "c"), "-c", "bogus=1"])
    assert r.exit_code == 2
    assert "unknown config key" in r.output


def test_cli_runtime_failure_exits_one(tmp_path):
    runner = CliRunner()
    r = runner.invoke(
        cli_main, ["train-disc", "--corpus", str(tmp_path / "missing"), "--models", str(tmp_path / "m")]
    )
    assert r.exit_code == 1
    assert "error:" in r.output
