"""CLI behavior: exit codes, env defaults, manifests, interrupts, reruns."""

import json
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from wrap_forge.cli import main
from wrap_forge.corpus_io import load_shard, write_shard
from wrap_forge.rephrase_client import RawRephrase, raw_to_document
from wrap_forge.sampledata import generate_documents
from wrap_forge.style_prompts import Style


def make_input_shard(tmp_path, count=6, seed=7, name="input"):
    docs = generate_documents(count, seed=seed)
    return [m.path for m in write_shard(docs, tmp_path / name)]


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- exit codes ---------------------------------------------------------------


def test_missing_style_is_usage_error(tmp_path):
    shard = make_input_shard(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["rephrase", "--in", *shard, "--out", str(tmp_path / "out")])
    assert exc.value.code == 2


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_runtime_failure_exits_one_with_error_line(tmp_path, capsys):
    rc = main(["eval", "--losses", str(tmp_path / "missing.jsonl"),
               "--report", str(tmp_path / "r.json")])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error: ")


def test_bad_mix_spec_exits_one(tmp_path, capsys):
    spec = tmp_path / "mix.cfg"
    spec.write_text("[mix]\nseed = not-a-number\n", encoding="utf-8")
    rc = main(["mix", "--spec", str(spec), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# -- rephrase ----------------------------------------------------------------


def test_rephrase_writes_shard_manifest_and_metadata(tmp_path):
    shard = make_input_shard(tmp_path)
    out = tmp_path / "raw"
    rc = main(["rephrase", "--in", *shard, "--out", str(out),
               "--style", "medium", "--endpoint", "mock"])
    assert rc == 0
    docs = list(load_shard(f"{out}-00000.jsonl"))
    assert len(docs) == 6
    assert all(d.meta["style"] == "medium" for d in docs)
    assert all(d.meta["parent_id"].startswith("demo-") for d in docs)

    manifest = read_json(f"{out}.manifest.json")
    assert manifest["subcommand"] == "rephrase"
    assert manifest["counts"]["rephrased"] == 6
    assert manifest["counts"]["failures"] == 0
    assert len(manifest["config_digest"]) == 64
    assert f"{out}-00000.jsonl" in manifest["outputs"]
    assert manifest["stats"]["requests"] == 6


def test_rephrase_env_defaults(tmp_path, monkeypatch):
    shard = make_input_shard(tmp_path)
    monkeypatch.setenv("WRAP_FORGE_STYLE", "qa")
    monkeypatch.setenv("WRAP_FORGE_OUT", str(tmp_path / "envraw"))
    monkeypatch.setenv("WRAP_FORGE_ENDPOINT", "mock")
    rc = main(["rephrase", "--in", *shard])
    assert rc == 0
    docs = list(load_shard(tmp_path / "envraw-00000.jsonl"))
    assert docs and all(d.meta["style"] == "qa" for d in docs)


def test_rephrase_rerun_is_byte_identical(tmp_path):
    shard = make_input_shard(tmp_path)
    args = ["--in", *shard, "--style", "medium", "--endpoint", "mock",
            "--max-in-flight", "4"]
    assert main(["rephrase", *args, "--out", str(tmp_path / "a")]) == 0
    assert main(["rephrase", *args, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a-00000.jsonl").read_bytes()
    b = (tmp_path / "b-00000.jsonl").read_bytes()
    assert a == b


# -- filter -------------------------------------------------------------------


def raw_doc(parent, text):
    raw = RawRephrase(parent_id=parent, chunk_index=0, style=Style.MEDIUM,
                      text=text, model_id="m", prompt_version="v",
                      latency=0.0, prompt_tokens=1, completion_tokens=1)
    return raw_to_document(raw)


def test_filter_report_and_custom_lexicon(tmp_path):
    docs = [
        raw_doc("p1", "Plain content survives."),
        raw_doc("p2", "BANNER: the real text follows here."),
    ]
    [m] = write_shard(docs, tmp_path / "raw")
    lexicon = tmp_path / "lexicon.txt"
    lexicon.write_text("BANNER\n", encoding="utf-8")
    out = tmp_path / "clean"
    report_path = tmp_path / "filter.json"
    rc = main(["filter", "--in", m.path, "--out", str(out),
               "--lexicon", str(lexicon), "--report", str(report_path)])
    assert rc == 0
    report = read_json(report_path)
    assert report == {"unchanged": 1, "modified": 1, "dropped": 0,
                      "dropped_by_reason": {}, "total": 2}
    kept = list(load_shard(f"{out}-00000.jsonl"))
    assert [d.text for d in kept] == ["Plain content survives.",
                                      "the real text follows here."]
    manifest = read_json(f"{out}.manifest.json")
    assert str(report_path) in manifest["outputs"]


# -- mix ----------------------------------------------------------------------


def write_mix_config(tmp_path, real_glob, synth_glob, weights=(1, 1), seed=3):
    spec = tmp_path / "mix.cfg"
    spec.write_text(
        "[mix]\n"
        f"seed = {seed}\n"
        "unit = documents\n"
        "policy = truncate-all\n\n"
        "[component.real]\n"
        f"weight = {weights[0]}\n"
        f"paths = {real_glob}\n"
        "real = true\n\n"
        "[component.synthetic]\n"
        f"weight = {weights[1]}\n"
        f"paths = {synth_glob}\n",
        encoding="utf-8",
    )
    return spec


def make_synth_shard(tmp_path, count, seed=9, name="synth"):
    texts = [d.text for d in generate_documents(count, seed=seed)]
    docs = [raw_doc(f"p{i:03d}", text) for i, text in enumerate(texts)]
    return [m.path for m in write_shard(docs, tmp_path / name)]


def test_mix_validates_and_reports(tmp_path):
    make_input_shard(tmp_path, count=8, name="real")
    make_synth_shard(tmp_path, count=10)
    spec = write_mix_config(tmp_path, "real-*.jsonl", "synth-*.jsonl")
    out = tmp_path / "mixdir"
    rc = main(["mix", "--spec", str(spec), "--out", str(out)])
    assert rc == 0
    report = read_json(out / "mix_report.json")
    assert report["validated"] is True
    assert report["docs"] == {"real": 8, "synthetic": 8}
    assert report["realized_ratio"] == {"real": 1.0, "synthetic": 1.0}
    docs = list(load_shard(out / "mixed-00000.jsonl"))
    assert len(docs) == 16
    manifest = read_json(out / "mix_manifest.json")
    assert str(out / "mix_report.json") in manifest["outputs"]


def test_mix_rejects_colliding_id_namespaces(tmp_path, capsys):
    # both sources use demo-NNNNN ids; the written mix then holds duplicate
    # ids, which validation must flag instead of undercounting silently
    make_input_shard(tmp_path, count=8, name="real")
    make_input_shard(tmp_path, count=10, seed=9, name="synth")
    spec = write_mix_config(tmp_path, "real-*.jsonl", "synth-*.jsonl")
    rc = main(["mix", "--spec", str(spec), "--out", str(tmp_path / "mixdir")])
    assert rc == 1
    assert "duplicate id" in capsys.readouterr().err


# -- metrics ------------------------------------------------------------------


def test_metrics_report_and_figures(tmp_path):
    real = make_input_shard(tmp_path, count=8, name="real")
    synth = make_input_shard(tmp_path, count=8, seed=5, name="synth")
    parses = tmp_path / "parses"
    parses.mkdir()
    rows = "\n".join([
        "1\tThe\t_\t_\t_\t_\t2\t_\t_\t_",
        "2\tcat\t_\t_\t_\t_\t3\t_\t_\t_",
        "3\tsat\t_\t_\t_\t_\t0\t_\t_\t_",
        "",
        "1\tDogs\t_\t_\t_\t_\t2\t_\t_\t_",
        "2\tbark\t_\t_\t_\t_\t0\t_\t_\t_",
    ])
    (parses / "sample.conllu").write_text(rows + "\n", encoding="utf-8")
    report_path = tmp_path / "metrics.json"
    rc = main(["metrics", "--real", *real, "--synthetic", *synth,
               "--parses", str(parses), "--report", str(report_path)])
    assert rc == 0
    report = read_json(report_path)
    assert set(report["slices"]) == {"real", "synthetic"}
    assert report["readability_fk"]["real"]["n_raw"] == 8
    assert report["syntactic"]["sample"]["sentences"] == 2
    assert "semantic_cosine" not in report  # no endpoint given
    for figure in ("metrics_readability.png", "metrics_diversity.png",
                   "metrics_depth.png", "metrics_mdd.png"):
        assert (tmp_path / figure).stat().st_size > 0


def test_metrics_semantic_section_via_mock(tmp_path):
    real = make_input_shard(tmp_path, count=6, name="real")
    raw = tmp_path / "raw"
    assert main(["rephrase", "--in", *real, "--out", str(raw),
                 "--style", "medium", "--endpoint", "mock"]) == 0
    report_path = tmp_path / "metrics.json"
    rc = main(["metrics", "--real", *real,
               "--synthetic", f"{raw}-00000.jsonl",
               "--report", str(report_path), "--endpoint", "mock"])
    assert rc == 0
    section = read_json(report_path)["semantic_cosine"]
    assert set(section) == {"synth-real", "random-real-real",
                            "half-vs-full", "half-vs-half"}
    assert section["synth-real"]["pairs"] == 6
    assert (tmp_path / "metrics_semantic.png").stat().st_size > 0


# -- eval and cost -------------------------------------------------------------


def test_eval_builtin_demo_outputs(tmp_path):
    report_path = tmp_path / "eval.json"
    rc = main(["eval", "--losses", "builtin:demo", "--report", str(report_path)])
    assert rc == 0
    payload = read_json(report_path)
    assert len(payload["rows"]) == 21
    weights = [row["weight"] for row in payload["rows"]]
    assert abs(sum(weights) - 1.0) < 1e-9
    assert payload["weighted_average"] > 1.0
    assert (tmp_path / "eval.txt").read_text().splitlines()[-1].startswith("weighted_avg")
    assert (tmp_path / "eval.png").stat().st_size > 0


def test_eval_explicit_losses_and_weights(tmp_path):
    losses = tmp_path / "losses.jsonl"
    losses.write_text(
        '{"domain": "A", "loss_sum": 0.0, "token_count": 10}\n'
        '{"domain": "B", "loss_sum": 20.0, "token_count": 10}\n',
        encoding="utf-8",
    )
    weights = tmp_path / "weights.tsv"
    weights.write_text("A\t1.0\nB\t3.0\n", encoding="utf-8")
    report_path = tmp_path / "eval.json"
    rc = main(["eval", "--losses", str(losses), "--weights", str(weights),
               "--report", str(report_path)])
    assert rc == 0
    payload = read_json(report_path)
    # 0.25 * e^0 + 0.75 * e^2
    import math
    assert abs(payload["weighted_average"] - (0.25 + 0.75 * math.e ** 2)) < 1e-9


def test_cost_report_files_and_reference_note(tmp_path):
    report_path = tmp_path / "cost.json"
    rc = main(["cost", "--report", str(report_path)])
    assert rc == 0
    payload = read_json(report_path)
    assert abs(payload["generation_gpu_hours"] - 85000 / 3) < 1e-6
    text = (tmp_path / "cost.txt").read_text(encoding="utf-8")
    assert "25,000" in text
    assert (tmp_path / "cost.png").stat().st_size > 0
    manifest = read_json(tmp_path / "cost.manifest.json")
    assert sorted(manifest["outputs"]) == sorted(
        [str(report_path), str(tmp_path / "cost.txt"), str(tmp_path / "cost.png")])


# -- interrupt and resume -------------------------------------------------------


def test_sigint_flushes_partial_and_checkpoint_then_resumes(tmp_path):
    shard = make_input_shard(tmp_path, count=20)
    out = tmp_path / "raw"
    proc = subprocess.Popen(
        [sys.executable, "-m", "wrap_forge.cli", "rephrase",
         "--in", *shard, "--out", str(out), "--style", "medium",
         "--endpoint", "mock:slow:300", "--max-in-flight", "2"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    time.sleep(2.0)
    proc.send_signal(signal.SIGINT)
    _, err = proc.communicate(timeout=30)
    assert proc.returncode == 1
    assert "error: interrupted" in err

    checkpoint = read_json(f"{out}.checkpoint.json")
    done = checkpoint["completed_parent_ids"]
    assert 0 < len(done) < 20
    partial = list(load_shard(f"{out}.partial-00000.jsonl"))
    assert {d.meta["parent_id"] for d in partial} >= set(done)

    rc = main(["rephrase", "--in", *shard, "--out", str(out),
               "--style", "medium", "--endpoint", "mock"])
    assert rc == 0
    resumed = list(load_shard(f"{out}-00000.jsonl"))
    assert len(resumed) == 20 - len(done)
    assert {d.meta["parent_id"] for d in resumed}.isdisjoint(done)


def test_mock_server_subcommand_serves_until_sigint():
    proc = subprocess.Popen(
        [sys.executable, "-m", "wrap_forge.cli", "mock-server"],
        stdout=subprocess.PIPE, text=True,
    )
    try:
        banner = proc.stdout.readline()
        assert banner.startswith("mock server (echo) listening on http://127.0.0.1:")
    finally:
        proc.send_signal(signal.SIGINT)
    assert proc.wait(timeout=10) == 0


# -- end to end -----------------------------------------------------------------


def test_end_to_end_smoke(tmp_path):
    out = tmp_path / "run"
    rc = main(["end-to-end", "--endpoint", "mock", "--docs", "12",
               "--out", str(out), "--max-in-flight", "4"])
    assert rc == 0
    manifest = read_json(out / "run_manifest.json")
    assert manifest["counts"]["real_docs"] == 12
    assert manifest["counts"]["mixed_docs"] == 2 * manifest["counts"]["synthetic_kept"]
    assert manifest["stats"]["peak_in_flight"] <= 4
    for path in manifest["outputs"]:
        assert Path(path).exists(), path
    mixed = list(load_shard(out / "mixed-00000.jsonl"))
    labels = [d.meta["mix_component"] for d in mixed]
    assert labels.count("real") == labels.count("synthetic")
