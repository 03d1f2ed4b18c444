import datetime as dt
import math

import pytest

from msie import corpus_io as cio
from msie.errors import (
    DegenerateSplit,
    DuplicateId,
    EmptyTable,
    MissingColumn,
    RangeViolation,
    UnknownCategory,
)

HEADER = "listing_id,host_id,first_review,latitude,longitude,price,description,host_about,bedrooms,is_superhost\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_parse_listing_accepts_valid_row(tmp_path):
    p = write(tmp_path, "l.csv", HEADER + 'L1,H1,2018-03-01,39.91,116.4,450,"Cozy, quiet",hi,2,t\n')
    t = cio.parse_listings(p)
    assert len(t) == 1
    r = t.records[0]
    assert r.latitude == 39.91 and r.price == 450.0
    assert r.description_text == "Cozy, quiet"
    assert t.stat_names == ("bedrooms", "is_superhost")
    assert r.raw_stats == (2.0, 1.0)


def test_latitude_out_of_range(tmp_path):
    p = write(tmp_path, "l.csv", HEADER + "L1,H1,2018-03-01,91.0,116.4,450,d,h,2,t\n")
    with pytest.raises(RangeViolation) as exc:
        cio.parse_listings(p, strict=True)
    assert exc.value.field == "latitude" and exc.value.row == 1
    lenient = cio.parse_listings(p)
    assert len(lenient) == 0
    assert lenient.rejected[0][0] == 1


def test_duplicate_listing_id(tmp_path):
    p = write(tmp_path, "l.csv", HEADER + "L1,H1,2018-03-01,39,116,450,d,h,2,t\nL1,H2,2018-03-02,39,116,300,d,h,1,f\n")
    with pytest.raises(DuplicateId):
        cio.parse_listings(p)


def test_missing_column(tmp_path):
    p = write(tmp_path, "l.csv", "listing_id,host_id\nL1,H1\n")
    with pytest.raises(MissingColumn) as exc:
        cio.parse_listings(p)
    assert exc.value.name == "first_review"
    p2 = write(tmp_path, "l2.csv", HEADER + "L1,H1,2018-03-01,39,116,450,d,h,2,t\n")
    with pytest.raises(MissingColumn):
        cio.parse_listings(p2, schema=["bedrooms", "bathrooms"])


def test_currency_booleans_and_missing(tmp_path):
    p = write(tmp_path, "l.csv", HEADER + 'L1,H1,2018-03-01,39,116,"$1,200.00",d,h,,f\n')
    r = cio.parse_listings(p).records[0]
    assert r.price == 1200.0
    assert math.isnan(r.raw_stats[0]) and r.raw_stats[1] == 0.0


def test_unparsable_numeric_rejected(tmp_path):
    p = write(tmp_path, "l.csv", HEADER + "L1,H1,2018-03-01,39,116,450,d,h,two,t\nL2,H1,2018-03-01,39,116,-5,d,h,2,t\n")
    t = cio.parse_listings(p)
    assert len(t) == 0
    assert [row for row, _ in t.rejected] == [1, 2]


def test_reviews(tmp_path):
    p = write(tmp_path, "r.csv", "review_id,listing_id,date,text\nR1,L1,2019-01-01,great location\nR2,L1,2019-01-02,   \n")
    t = cio.parse_reviews(p)
    assert len(t) == 1 and t.n_dropped == 1
    assert t.records[0].text == "great location"
    empty = write(tmp_path, "e.csv", "review_id,listing_id,date,text\n")
    with pytest.raises(EmptyTable):
        cio.parse_reviews(empty)
    bad = write(tmp_path, "b.csv", "review_id,listing_id,text\nR1,L1,x\n")
    with pytest.raises(MissingColumn):
        cio.parse_reviews(bad)


def test_pois(tmp_path):
    p = write(tmp_path, "p.csv", "poi_id,category,latitude,longitude\nP1,Food,39.9,116.4\nP2,  transportation ,39.9,116.4\n")
    t = cio.parse_pois(p)
    assert [x.category for x in t] == ["Food", "Transportation"]
    assert len(t.by_category()["Food"]) == 1
    bad = write(tmp_path, "q.csv", "poi_id,category,latitude,longitude\nP1,Nightlife,39.9,116.4\n")
    with pytest.raises(UnknownCategory) as exc:
        cio.parse_pois(bad)
    assert exc.value.value == "Nightlife"


def _listing(lid, day):
    return cio.ListingRecord(lid, "H", day, 39.9, 116.4, 100.0, (1.0,))


def _table(records):
    return cio.ListingTable(tuple(records), ("x",))


def test_temporal_split_distinct_dates():
    base = dt.date(2018, 1, 1)
    recs = [_listing(f"L{i}", base + dt.timedelta(days=i)) for i in range(10)]
    train, test = cio.temporal_split(_table(reversed(recs)), 0.8)
    assert train.ids == [f"L{i}" for i in range(8)]
    assert test.ids == ["L8", "L9"]


def test_temporal_split_ties_break_on_listing_id():
    # hand-sorted order: "L0" < "L1" < "L10" < "L2" < ... < "L8" (lexicographic)
    day = dt.date(2018, 1, 1)
    ids = [f"L{i}" for i in (2, 10, 0, 5, 1, 8, 3, 6, 4, 7)]
    train, test = cio.temporal_split(_table(_listing(i, day) for i in ids), 0.8)
    assert train.ids == ["L0", "L1", "L10", "L2", "L3", "L4", "L5", "L6"]
    assert test.ids == ["L7", "L8"]


def test_temporal_split_degenerate():
    with pytest.raises(DegenerateSplit):
        cio.temporal_split(_table([_listing("L1", dt.date(2018, 1, 1))]))


def test_temporal_split_properties():
    import random

    rng = random.Random(0)
    recs = [_listing(f"L{i}", dt.date(2018, 1, 1) + dt.timedelta(days=rng.randint(0, 5))) for i in range(37)]
    table = _table(recs)
    train, test = cio.temporal_split(table, 0.8)
    assert len(train) == math.floor(0.8 * 37)
    assert set(train.ids).isdisjoint(test.ids)
    assert max(r.first_review_date for r in train) <= min(r.first_review_date for r in test)
    key = lambda r: (r.first_review_date, r.listing_id)
    assert sorted(train.records + test.records, key=key) == sorted(recs, key=key)
    again = cio.temporal_split(table, 0.8)
    assert again[0].ids == train.ids and again[1].ids == test.ids


def test_dataset_stats_echoes_table_i_counts():
    # Beijing row: 10779 houses, 191876 reviews, 01/2017-06/2019
    listings = _table(_listing(f"L{i}", dt.date(2017, 1, 1)) for i in range(10779))
    first, last = dt.date(2017, 1, 1), dt.date(2019, 6, 30)
    docs = tuple(cio.ReviewDoc(f"R{i}", "L0", "ok", first if i == 0 else last) for i in range(191876))
    s = cio.dataset_stats(listings, cio.ReviewTable(docs), cio.PoiTable(()))
    assert s.n_listings == 10779 and s.n_reviews == 191876
    assert s.time_span == (first, last)
    assert all(v == 0 for v in s.per_category_poi_counts.values())
    assert len(s.per_category_poi_counts) == 8

    sh = cio.dataset_stats(_table(_listing(f"L{i}", first) for i in range(8638)),
                           cio.ReviewTable(docs[:159069]))
    assert (sh.n_listings, sh.n_reviews) == (8638, 159069)


def test_stats_counts_match_lines_minus_rejects(tmp_path):
    rows = [f"L{i},H,2018-01-0{1 + i % 9},{39 + (100 if i == 3 else 0)},116,10,d,h,1,t" for i in range(12)]
    p = write(tmp_path, "l.csv", HEADER + "\n".join(rows) + "\n")
    t = cio.parse_listings(p)
    n_lines = len(p.read_text().splitlines()) - 1
    assert cio.dataset_stats(t).n_listings == n_lines - len(t.rejected) == 11

    pois = write(tmp_path, "p.csv", "poi_id,category,latitude,longitude\nA,Food,1,1\nB,Food,1,1\nC,Tourist,1,1\n")
    s = cio.dataset_stats(t, None, cio.parse_pois(pois))
    assert s.per_category_poi_counts["Food"] == 2 and s.n_pois == 3


def test_round_trip(tmp_path):
    from msie.synth import SynthConfig, synth_generate

    ds = synth_generate(SynthConfig(n_listings=30, n_pois=5, seed=3))
    paths = ds.write(tmp_path)
    l1 = cio.parse_listings(paths["listings"])
    r1 = cio.parse_reviews(paths["reviews"])
    p1 = cio.parse_pois(paths["pois"])
    cio.write_listings(l1, tmp_path / "l2.csv")
    cio.write_reviews(r1, tmp_path / "r2.csv")
    cio.write_pois(p1, tmp_path / "p2.csv")
    assert cio.parse_listings(tmp_path / "l2.csv").records == l1.records
    assert cio.parse_reviews(tmp_path / "r2.csv").records == r1.records
    assert cio.parse_pois(tmp_path / "p2.csv").records == p1.records
    # NaN != NaN, so compare the missing pattern explicitly
    for a, b in zip(l1.records, ds.listings.records):
        assert [math.isnan(x) for x in a.raw_stats] == [math.isnan(x) for x in b.raw_stats]
