import pytest

from densewire import oracles, sampling, store
from densewire.errors import SchemaError
from densewire.graphs import preset_space


def _records(n, seed=0):
    oracle = oracles.SyntheticLandscapeA()
    metas = sampling.sample_random(preset_space("cifar10"), n, seed=seed)
    return [store.make_record(m, oracle.score(m), "measured", seed) for m in metas]


def test_append_then_load_round_trips(tmp_path):
    path = tmp_path / "arch.jsonl"
    records = _records(3)
    store.append_records(path, records)
    assert store.load_records(path) == records


def test_append_is_append_only(tmp_path):
    path = tmp_path / "arch.jsonl"
    first = _records(2, seed=1)
    second = _records(2, seed=2)
    store.append_records(path, first)
    store.append_records(path, second)
    assert store.load_records(path) == first + second


def test_empty_file_loads_empty(tmp_path):
    path = tmp_path / "arch.jsonl"
    path.write_text("")
    assert store.load_records(path) == []


def test_truncated_line_reports_its_number(tmp_path):
    path = tmp_path / "arch.jsonl"
    store.append_records(path, _records(2))
    with open(path, "a") as fh:
        fh.write('{"meta": {"version"')
    with pytest.raises(SchemaError) as exc:
        store.load_records(path)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_missing_field_rejected(tmp_path):
    path = tmp_path / "arch.jsonl"
    rec = _records(1)[0]
    line = store.dump_record(rec).replace(',"source":"measured"', "")
    path.write_text(line + "\n")
    with pytest.raises(SchemaError):
        store.load_records(path)


def test_stale_canonical_key_rejected(tmp_path):
    path = tmp_path / "arch.jsonl"
    rec = _records(1)[0]
    forged = store.ArchRecord(rec.meta, rec.perf, rec.source, "00" * 8, rec.seed)
    path.write_text(store.dump_record(forged) + "\n")
    with pytest.raises(SchemaError):
        store.load_records(path)
    assert store.load_records(path, verify_canon=False)[0].canon == "00" * 8


def test_out_of_range_perf_rejected(tmp_path):
    path = tmp_path / "arch.jsonl"
    rec = _records(1)[0]
    line = store.dump_record(rec)
    line = line.replace(f'"perf":{rec.perf!r}', '"perf":1.5')
    path.write_text(line + "\n")
    with pytest.raises(SchemaError):
        store.load_records(path)


def test_unknown_source_rejected():
    rec = _records(1)[0]
    with pytest.raises(ValueError):
        store.ArchRecord(rec.meta, rec.perf, "predicted-ish", rec.canon, rec.seed)


def test_one_bad_line_poisons_the_file(tmp_path):
    path = tmp_path / "arch.jsonl"
    store.append_records(path, _records(2))
    with open(path, "a") as fh:
        fh.write("[]\n")
    store.append_records(path, _records(1, seed=5))
    with pytest.raises(SchemaError):
        store.load_records(path)


def test_summarize_counts():
    records = _records(4)
    forged = [
        store.ArchRecord(r.meta, r.perf, "augmented", r.canon, r.seed)
        for r in records[:2]
    ]
    summary = store.summarize(records + forged)
    assert summary["records"] == 6
    assert summary["measured"] == 4
    assert summary["augmented"] == 2
    assert summary["classes"] == 4
    assert 0.0 <= summary["perf_min"] <= summary["perf_mean"] <= summary["perf_max"] <= 1.0


def test_summarize_empty():
    summary = store.summarize([])
    assert summary["records"] == 0
    assert summary["perf_mean"] is None
