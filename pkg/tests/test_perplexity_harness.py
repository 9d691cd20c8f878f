"""Perplexity arithmetic against frozen hand values and a brute-force oracle."""

import json
import math
import random

import pytest

from wrap_forge.perplexity_harness import (
    BUILTIN_PILE,
    DomainLossRecord,
    DomainWeightTable,
    builtin_weight_table,
    load_loss_records,
    load_weight_table,
    macro_perplexity,
    normalize_weights,
    perplexity_report,
    resolve_weight_table,
    weighted_average_perplexity,
)

E_TO_20 = 485165195.4097903  # e^20, evaluated by hand once and frozen


def rec(domain, loss_sum, token_count):
    return DomainLossRecord(domain=domain, loss_sum=loss_sum, token_count=token_count)


def norm_table(**weights):
    return DomainWeightTable(entries=tuple(weights.items()), normalized=True)


# -- macro perplexity ------------------------------------------------------


def test_zero_loss_is_one():
    assert macro_perplexity(rec("a", 0.0, 100)) == 1.0


def test_log_two_inverts_to_two():
    assert macro_perplexity(rec("a", math.log(2) * 50, 50)) == pytest.approx(2.0, rel=1e-12)


def test_cap_engages_above_twenty():
    capped = macro_perplexity(rec("a", 25.0 * 10, 10))
    assert capped == pytest.approx(E_TO_20, rel=1e-12)
    at_cap = macro_perplexity(rec("a", 20.0 * 7, 7))
    assert at_cap == pytest.approx(E_TO_20, rel=1e-12)
    below = macro_perplexity(rec("a", 19.9999, 1))
    assert below < capped


def test_matches_bruteforce_oracle():
    rng = random.Random(20240818)
    for _ in range(300):
        token_count = rng.randint(1, 10_000)
        loss_sum = rng.uniform(0, 30) * token_count
        expected = math.exp(min(20.0, loss_sum / token_count))
        got = macro_perplexity(rec("d", loss_sum, token_count))
        assert abs(got - expected) <= 1e-12 * expected


def test_monotone_in_loss_and_bounded():
    grades = [macro_perplexity(rec("a", ls, 10)) for ls in (0.0, 5.0, 50.0, 150.0, 500.0)]
    assert grades == sorted(grades)
    assert all(1.0 <= g <= E_TO_20 * (1 + 1e-12) for g in grades)


def test_record_validation():
    with pytest.raises(ValueError):
        rec("a", -0.1, 10)
    with pytest.raises(ValueError):
        rec("a", float("nan"), 10)
    with pytest.raises(ValueError):
        rec("a", 1.0, 0)
    with pytest.raises(ValueError):
        rec("", 1.0, 10)
    with pytest.raises(ValueError):
        DomainLossRecord(domain="a", loss_sum=1.0, token_count=10, log_base="2")


# -- weight tables ----------------------------------------------------------


def test_load_two_line_table(tmp_path):
    path = tmp_path / "w.tsv"
    path.write_text("# comment\na\t50\n\nb\t50\n", encoding="utf-8")
    table = load_weight_table(path)
    assert table.entries == (("a", 50.0), ("b", 50.0))
    assert not table.normalized
    normalized = normalize_weights(table)
    assert normalized.weight_map() == {"a": 0.5, "b": 0.5}
    assert normalized.normalized


def test_load_accepts_space_separation(tmp_path):
    path = tmp_path / "w.tsv"
    path.write_text("a 50\nb 25\n", encoding="utf-8")
    assert load_weight_table(path).weight_map() == {"a": 50.0, "b": 25.0}


def test_load_rejects_bad_tables(tmp_path):
    dup = tmp_path / "dup.tsv"
    dup.write_text("a\t50\na\t25\n", encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate domain"):
        load_weight_table(dup)
    neg = tmp_path / "neg.tsv"
    neg.write_text("a\t-1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="negative"):
        load_weight_table(neg)
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tfifty\n", encoding="utf-8")
    with pytest.raises(ValueError, match="non-numeric"):
        load_weight_table(bad)
    empty = tmp_path / "empty.tsv"
    empty.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no weight entries"):
        load_weight_table(empty)


def test_builtin_table_shape():
    table = builtin_weight_table()
    assert len(table.entries) == 21
    assert table.total() == pytest.approx(97.2, abs=1e-9)
    weights = table.weight_map()
    assert weights["Pile-CC"] == 14.0
    assert weights["Wikipedia"] == 3.4
    assert resolve_weight_table(BUILTIN_PILE).entries == table.entries
    with pytest.raises(ValueError, match="unknown builtin"):
        resolve_weight_table("builtin:nope")


def test_normalize_subsets():
    table = builtin_weight_table()
    only_wiki = normalize_weights(table, include={"Wikipedia"})
    assert only_wiki.weight_map() == {"Wikipedia": 1.0}
    everything = normalize_weights(table)
    assert sum(everything.weight_map().values()) == pytest.approx(1.0, abs=1e-12)
    assert everything.weight_map()["ArXiv"] == pytest.approx(10.4 / 97.2, abs=1e-12)
    with pytest.raises(ValueError, match="empty domain set"):
        normalize_weights(table, include=set())
    with pytest.raises(ValueError, match="not in table"):
        normalize_weights(table, include={"Wikipedia", "NotADomain"})
    zeros = DomainWeightTable(entries=(("a", 0.0), ("b", 0.0)))
    with pytest.raises(ValueError, match="all zero"):
        normalize_weights(zeros)


# -- weighted average --------------------------------------------------------


def test_single_domain_weight_one():
    records = [rec("solo", math.log(7) * 10, 10)]
    got = weighted_average_perplexity(records, norm_table(solo=1.0))
    assert got == pytest.approx(7.0, rel=1e-12)


def test_two_domain_hand_value():
    # 0.25 * 10 + 0.75 * 20 = 17.5
    records = [
        rec("a", math.log(10) * 40, 40),
        rec("b", math.log(20) * 40, 40),
    ]
    got = weighted_average_perplexity(records, norm_table(a=0.25, b=0.75))
    assert got == pytest.approx(17.5, abs=1e-9)


def test_alignment_errors():
    records = [rec("a", 1.0, 10)]
    with pytest.raises(ValueError, match="'a'"):
        weighted_average_perplexity(records, norm_table(b=1.0))
    with pytest.raises(ValueError, match="without records"):
        weighted_average_perplexity(records, norm_table(a=0.5, b=0.5))
    with pytest.raises(ValueError, match="duplicate records"):
        weighted_average_perplexity(records + records, norm_table(a=1.0))
    with pytest.raises(ValueError, match="normalized"):
        weighted_average_perplexity(records, DomainWeightTable(entries=(("a", 2.0),)))
    with pytest.raises(ValueError, match="no domains"):
        weighted_average_perplexity([], norm_table(a=1.0))


def test_permutation_invariance_and_bruteforce():
    rng = random.Random(42)
    for _ in range(50):
        n = rng.randint(1, 8)
        domains = [f"d{i}" for i in range(n)]
        records = [rec(d, rng.uniform(0, 40), rng.randint(1, 9)) for d in domains]
        raw = {d: rng.uniform(0.1, 5.0) for d in domains}
        total = sum(raw.values())
        table = DomainWeightTable(
            entries=tuple((d, w / total) for d, w in raw.items()), normalized=True
        )
        got = weighted_average_perplexity(records, table)
        oracle = sum(
            (raw[r.domain] / total) * math.exp(min(20.0, r.loss_sum / r.token_count))
            for r in records
        )
        assert got == pytest.approx(oracle, rel=1e-12)
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert weighted_average_perplexity(shuffled, table) == got


# -- report -------------------------------------------------------------------


def test_report_rows_and_consistency():
    records = [
        rec("zeta", math.log(4) * 5, 5),
        rec("alpha", math.log(2) * 5, 5),
        rec("mid", math.log(8) * 5, 5),
    ]
    table = norm_table(zeta=0.5, alpha=0.25, mid=0.25)
    report = perplexity_report(records, table)
    assert [r.domain for r in report.rows] == ["alpha", "mid", "zeta"]
    assert report.weighted_average == pytest.approx(
        weighted_average_perplexity(records, table), rel=1e-15
    )
    text = report.to_text()
    lines = text.strip().splitlines()
    assert lines[0].split() == ["domain", "weight", "perplexity"]
    assert len(lines) == 5
    assert lines[-1].startswith("weighted_avg")
    payload = report.to_json_dict()
    assert len(payload["rows"]) == 3
    assert payload["weighted_average"] == report.weighted_average
    json.dumps(payload)  # must be serializable as-is


def test_report_requires_records():
    with pytest.raises(ValueError, match="no domains"):
        perplexity_report([], norm_table(a=1.0))


# -- loss record files ---------------------------------------------------------


def test_load_loss_records_round_trip(tmp_path):
    path = tmp_path / "losses.jsonl"
    rows = [
        {"domain": "a", "loss_sum": 12.5, "token_count": 10},
        {"domain": "b", "loss_sum": 0.0, "token_count": 3, "log_base": "e"},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    records = load_loss_records(path)
    assert [r.domain for r in records] == ["a", "b"]
    assert records[0].loss_sum == 12.5
    assert records[1].token_count == 3


def test_load_loss_records_errors(tmp_path):
    def write(name, lines):
        p = tmp_path / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return p

    with pytest.raises(ValueError, match="line 2|:2:"):
        load_loss_records(
            write("dup.jsonl", [
                '{"domain": "a", "loss_sum": 1, "token_count": 1}',
                '{"domain": "a", "loss_sum": 2, "token_count": 1}',
            ])
        )
    with pytest.raises(ValueError, match="invalid JSON"):
        load_loss_records(write("bad.jsonl", ["{not json"]))
    with pytest.raises(ValueError, match="unknown keys"):
        load_loss_records(
            write("extra.jsonl", ['{"domain": "a", "loss_sum": 1, "token_count": 1, "x": 2}'])
        )
    with pytest.raises(ValueError, match="natural-log"):
        load_loss_records(
            write("base.jsonl", ['{"domain": "a", "loss_sum": 1, "token_count": 1, "log_base": "2"}'])
        )
    with pytest.raises(ValueError, match="positive integer"):
        load_loss_records(write("tok.jsonl", ['{"domain": "a", "loss_sum": 1, "token_count": 0}']))
    with pytest.raises(ValueError, match="no loss records"):
        load_loss_records(write("empty.jsonl", [""]))
