import pytest

from subwsi.data import (
    COLUMNS,
    SyntheticSpec,
    dataset_tsv,
    gold_nc_by_word,
    make_synthetic,
    parse_positions,
    read_corpus,
    read_dataset,
    write_corpus,
    write_predictions,
)
from subwsi.errors import DomainError, IngestError

HEADER = "\t".join(COLUMNS)


def write(tmp_path, *rows, header=HEADER):
    path = tmp_path / "d.tsv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


def test_minimal_file(tmp_path):
    path = write(tmp_path, "1\tзамок\ts1\t\t0-5\tзамок на двери", "2\tзамок\ts2\t\t2-7\tв замок")
    ds = read_dataset(path)
    assert len(ds.occurrences) == 2 and list(ds.by_word) == ["замок"]
    assert ds.occurrences[1].target == "замок"


def test_senses_per_word(tmp_path):
    rows = [f"{i}\tw\t{s}\t\t0-1\tw x" for i, s in enumerate(["s1", "s1", "s2"])]
    assert read_dataset(write(tmp_path, *rows)).summary()["senses_per_word"] == 2


def test_ingestion_errors(tmp_path):
    with pytest.raises(IngestError, match="line 2"):
        read_dataset(write(tmp_path, "1\tw\ts\t\t10-15\tshort"))
    with pytest.raises(IngestError, match="line 3.*duplicate"):
        read_dataset(write(tmp_path, "1\tw\ts\t\t0-1\tw", "1\tw\ts\t\t0-1\tw"))
    with pytest.raises(IngestError, match="missing column"):
        read_dataset(write(tmp_path, "1\tw\t0-1\tw", header="context_id\tword\tpositions\tcontext"))
    with pytest.raises(IngestError, match="line 2"):
        read_dataset(write(tmp_path, "1\tw\ts"))


def test_positions():
    assert parse_positions("3-8") == (3, 8)
    assert parse_positions("3-8, 20-25") == (3, 8)
    with pytest.raises(ValueError):
        parse_positions("38")


def test_predictions_round_trip(tmp_path):
    ds = read_dataset(write(tmp_path, "a\tw\ts1\t\t0-1\tw x", "b\tw\ts2\t\t2-3\tx w"))
    out = tmp_path / "p.tsv"
    write_predictions(ds, {"a": "0", "b": "1"}, out)
    back = read_dataset(out)
    assert [r["predict_sense_id"] for r in back.rows] == ["0", "1"]
    with pytest.raises(ValueError):
        dataset_tsv([{"context_id": "x\ty"}])


def test_synthetic_shape(tmp_path):
    syn = make_synthetic(SyntheticSpec(seed=3, num_pseudowords=3, examples_per_sense=5, corpus_tokens=2000))
    assert sum(len(s) for s in syn.corpus) >= 2000
    assert len(syn.dataset.occurrences) == 30
    assert set(gold_nc_by_word(syn.dataset).values()) == {2}
    for occ in syn.dataset.occurrences:
        assert occ.target == occ.word
        assert occ.word.startswith(occ.gold_sense_id) or occ.word.endswith(occ.gold_sense_id)
    write_corpus(syn.corpus, tmp_path / "c.txt")
    assert read_corpus(tmp_path / "c.txt") == syn.corpus
    path = tmp_path / "d.tsv"
    path.write_text(dataset_tsv(syn.dataset.rows), encoding="utf-8")
    assert read_dataset(path).occurrences == syn.dataset.occurrences


def test_synthetic_deterministic():
    a = make_synthetic(SyntheticSpec(seed=1, corpus_tokens=1000))
    b = make_synthetic(SyntheticSpec(seed=1, corpus_tokens=1000))
    assert a.corpus == b.corpus and a.dataset.rows == b.dataset.rows
    with pytest.raises(DomainError):
        make_synthetic(SyntheticSpec(num_classes=4, num_pseudowords=3))
