import io
import json
from datetime import date, datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hashtagnet.corpus import (
    CorpusConfig,
    CorpusIOError,
    MessageRecord,
    SchemaError,
    day_range,
    extract_hashtags,
    filter_records,
    normalize_hashtag,
    parse_records,
    write_jsonl,
)

from oracles import make_record


def _jsonl(*objs):
    return io.BytesIO("\n".join(json.dumps(o) for o in objs).encode())


@pytest.mark.parametrize(
    "token, expected",
    [("#OWS!", "ows"), ("#Occupy", "occupy"), ("#j28", "j28"), ("  #nypd.", "nypd")],
)
def test_normalize_hashtag_examples(token, expected):
    assert normalize_hashtag(token) == expected


def test_normalize_without_fold_keeps_case():
    assert normalize_hashtag("#OWS!", lowercase_fold=False) == "OWS"


@given(st.text(max_size=20))
def test_normalize_hashtag_idempotent(token):
    once = normalize_hashtag(token)
    assert normalize_hashtag(once) == once


def test_extract_hashtags_from_text():
    assert extract_hashtags("hi #OWS #nypd and #OWS again") == ["ows", "nypd"]
    assert extract_hashtags("nothing to see") == []


def test_parse_jsonl_basic_line():
    res = parse_records(_jsonl({"user": "a", "text": "hi #OWS #nypd", "timestamp": "2011-10-26T00:00:00Z"}))
    (rec,) = res.records
    assert rec.author == "a"
    assert rec.hashtags == ("ows", "nypd")
    assert rec.timestamp == datetime(2011, 10, 26, tzinfo=timezone.utc)


def test_parse_line_without_hashtags():
    res = parse_records(_jsonl({"user": "a", "text": "plain words", "timestamp": "2011-10-26T00:00:00Z"}))
    assert res.records[0].hashtags == ()


def test_explicit_hashtag_field_wins_over_text():
    res = parse_records(
        _jsonl({"user": "@Bob", "text": "#x", "hashtags": ["#Y", "y"], "timestamp": "2011-10-26T10:00:00+02:00"})
    )
    rec = res.records[0]
    assert rec.author == "bob"
    assert rec.hashtags == ("y",)
    assert rec.timestamp.hour == 8


def test_malformed_lines_counted():
    good = {"user": "a", "text": "#x", "timestamp": "2011-10-26T00:00:00Z"}
    src = io.BytesIO((json.dumps(good) + "\n" + json.dumps(good) + "\nnot json\n\n").encode())
    res = parse_records(src)
    assert (len(res.records), res.n_lines, res.n_malformed) == (2, 3, 1)


def test_mostly_malformed_is_schema_error():
    src = io.BytesIO(b'{"user": "a", "text": "#x", "timestamp": "2011-10-26T00:00:00Z"}\nbad\nworse\n')
    with pytest.raises(SchemaError):
        parse_records(src)


def test_unreadable_stream_is_io_error(tmp_path):
    with pytest.raises(CorpusIOError):
        parse_records(tmp_path / "missing.jsonl")
    with pytest.raises(CorpusIOError):
        parse_records(io.BytesIO(b"\xff\xfe\xfa"))


def test_csv_format():
    text = "id,user,hashtags,timestamp\n1,a,OWS|nypd,2011-10-26T00:00:00Z\n2,b,,2011-10-27T00:00:00Z\n"
    res = parse_records(io.BytesIO(text.encode()), fmt="csv")
    assert [r.hashtags for r in res.records] == [("ows", "nypd"), ()]


def test_jsonl_round_trip(tmp_path):
    recs = [make_record(0, "a", ["x", "y"]), make_record(1, "b", [], day=2)]
    path = tmp_path / "c.jsonl"
    with open(path, "w") as fh:
        write_jsonl(recs, fh)
    assert parse_records(path).records == recs


def test_record_rejects_duplicate_hashtags():
    with pytest.raises(ValueError):
        MessageRecord("m", "a", ("x", "x"), datetime(2011, 1, 1, tzinfo=timezone.utc))


def test_default_config_drops_occupy():
    out = filter_records([make_record(0, "a", ["occupy", "ows"])], CorpusConfig())
    assert out[0].hashtags == ("ows",)


def test_empty_exclusion_is_identity():
    recs = [make_record(i, "a", ["occupy", f"t{i}"], day=i) for i in range(3)]
    assert filter_records(recs, CorpusConfig(excluded_hashtags=frozenset())) == recs


def test_date_range_outside_everything():
    recs = [make_record(i, "a", ["x"], day=i) for i in range(3)]
    cfg = CorpusConfig(date_range=day_range(date(2012, 1, 1), date(2012, 2, 1)))
    assert filter_records(recs, cfg) == []


def test_date_range_is_inclusive_by_day():
    recs = [make_record(i, "a", ["x"], day=i) for i in range(3)]
    cfg = CorpusConfig(date_range=day_range(date(2011, 10, 27), date(2011, 10, 27)))
    assert [r.message_id for r in filter_records(recs, cfg)] == ["m1"]


def test_config_rejects_inverted_range():
    with pytest.raises(ValueError):
        CorpusConfig(date_range=day_range(date(2012, 1, 2), date(2012, 1, 1)))
