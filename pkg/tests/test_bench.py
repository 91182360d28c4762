import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from transdetect.bench import (
    DatasetManifest,
    ManifestEntry,
    category_counts,
    load_manifest,
    pooled_segment_prf,
    quality_weighted_sampler,
    run_benchmark,
    write_manifest,
)
from transdetect.errors import PreconditionError
from transdetect.segments import Segment, write_label_file
from transdetect.synth import procedural_shots, sample_plan, synthesize
from transdetect.video import save_rawvid

ENTRY = ManifestEntry("v.stdv", "v.json", Fraction(25))


def _manifest(name, tier, n=1):
    return DatasetManifest(name, "test", tier, [ENTRY] * n)


def test_unknown_tier_rejected():
    with pytest.raises(PreconditionError):
        _manifest("x", "Low")


def test_single_tier_always_drawn():
    draws = itertools.islice(quality_weighted_sampler([_manifest("a", "VeryHigh")], seed=1), 1000)
    assert {m.quality for m, _ in draws} == {"VeryHigh"}


def test_sampler_is_deterministic():
    ms = [_manifest("a", "VeryHigh"), _manifest("b", "High", 3), _manifest("c", "Medium", 2)]
    a = [(m.name, id(e)) for m, e in itertools.islice(quality_weighted_sampler(ms, seed=5), 200)]
    b = [(m.name, id(e)) for m, e in itertools.islice(quality_weighted_sampler(ms, seed=5), 200)]
    assert a == b


def test_sampler_renormalises_over_present_tiers():
    ms = [_manifest("a", "High"), _manifest("b", "Medium")]
    n = 30_000
    high = sum(m.quality == "High" for m, _ in itertools.islice(quality_weighted_sampler(ms, seed=2), n))
    p = 0.2 / 0.3
    assert abs(high - n * p) <= 4 * np.sqrt(n * p * (1 - p))


def test_sampler_empty():
    with pytest.raises(PreconditionError):
        next(quality_weighted_sampler([]))


def test_category_counts():
    labels = [Segment(4, 4), Segment(3, 4), Segment(2, 4.5), Segment(1, 1.05)]
    assert category_counts(labels) == {"Cut": 2, "Normal": 1, "Long": 1}


def test_pooled_counts():
    p, r, _ = pooled_segment_prf([(1, 0, 1), (1, 1, 0)])
    assert p == pytest.approx(2 / 3) and r == pytest.approx(2 / 3)


@pytest.fixture
def dataset(tmp_path):
    entries = []
    for v in range(3):
        shots = procedural_shots(2, 32, 24, 6, 25, seed=v)
        clip, labels = synthesize(sample_plan(shots, v))
        save_rawvid(clip, tmp_path / f"v{v}.stdv")
        write_label_file(tmp_path / f"v{v}.json", f"v{v}.stdv", clip.fps, clip.duration, labels)
        entries.append(ManifestEntry(tmp_path / f"v{v}.stdv", tmp_path / f"v{v}.json", clip.fps))
    manifest = DatasetManifest("synthetic", "procedural", "VeryHigh", entries)
    path = tmp_path / "manifest.json"
    doc = manifest.to_json()
    for e in doc["entries"]:
        e["video"] = str(e["video"]).rsplit("/", 1)[-1]
        e["labels"] = str(e["labels"]).rsplit("/", 1)[-1]
    path.write_text(json.dumps(doc))
    return path


def test_manifest_round_trip(dataset, tmp_path):
    m = load_manifest(dataset)
    assert m.quality == "VeryHigh" and len(m.entries) == 3
    assert m.entries[0].video.exists()
    write_manifest(m, tmp_path / "copy.json")
    assert load_manifest(tmp_path / "copy.json").entries == m.entries


def test_manifest_missing_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"name": "x", "quality": "High", "entries": [{"video": "nope.stdv", "labels": "nope.json"}]}))
    with pytest.raises(PreconditionError):
        load_manifest(path)


def test_oracle_benchmark_is_perfect(dataset):
    result = run_benchmark([load_manifest(dataset)], "oracle")
    assert result.exit_status == 0
    for row in result.micro.rows:
        assert row.segment[2] == 1.0 and row.frame[2] == 1.0


def test_partial_failure_exit_status(dataset, tmp_path):
    m = load_manifest(dataset)
    (tmp_path / "v1.stdv").write_bytes(b"garbage")
    result = run_benchmark([m], "content")
    assert len(result.failures) == 1
    assert result.exit_status == 2
    assert result.micro is not None


def test_all_failed(dataset, tmp_path):
    m = load_manifest(dataset)
    for v in range(3):
        (tmp_path / f"v{v}.stdv").write_bytes(b"garbage")
    result = run_benchmark([m], "content")
    assert result.micro is None and result.exit_status == 1


def test_empty_benchmark():
    with pytest.raises(PreconditionError):
        run_benchmark([DatasetManifest("e", "", "High", [])])


def test_macro_over_datasets(dataset):
    a = load_manifest(dataset)
    b = DatasetManifest("other", "x", "High", a.entries[:1])
    result = run_benchmark([a, b], "oracle")
    macro = result.macro()
    assert macro["seg_f1"] == 1.0
    assert set(result.per_dataset) == {"synthetic", "other"}
