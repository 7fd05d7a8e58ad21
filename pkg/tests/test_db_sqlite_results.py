from experiments.db_sqlite_results import fetch_records, init_db, insert_record, insert_records
from utils.utils_seeding import derive_seed


def record(instance_id, method="SLI", dataset="toy", success=1):
    return {
        "dataset": dataset,
        "method": method,
        "instance_id": instance_id,
        "success": success,
        "K": 3,
        "r": 3,
        "b": 1,
        "x": 3,
        "d_sym": "1/3",
        "wall_time_s": 0.01,
        "seed": 7,
    }


def test_insert_and_fetch_sorted(tmp_path):
    db = tmp_path / "nested" / "results.sqlite"
    init_db(db)
    insert_records([record("b"), record("a"), record("a", method="TDMA")], db)
    rows = fetch_records(db)
    assert [(r["method"], r["instance_id"]) for r in rows] == [("SLI", "a"), ("SLI", "b"), ("TDMA", "a")]
    assert rows[0] == record("a")


def test_filters(tmp_path):
    db = tmp_path / "results.sqlite"
    init_db(db)
    insert_record(record("a", dataset="one"), db)
    insert_record(record("a", dataset="two", method="OSIA"), db)
    assert len(fetch_records(db, dataset="one")) == 1
    assert fetch_records(db, method="OSIA")[0]["dataset"] == "two"
    assert fetch_records(db, dataset="one", method="OSIA") == []


def test_fresh_init_drops_rows(tmp_path):
    db = tmp_path / "results.sqlite"
    init_db(db)
    insert_record(record("a"), db)
    init_db(db)
    assert len(fetch_records(db)) == 1
    init_db(db, fresh=True)
    assert fetch_records(db) == []


def test_derived_seeds_round_trip_through_sqlite(tmp_path):
    db = tmp_path / "results.sqlite"
    init_db(db)
    seeds = [derive_seed(20240601, k) for k in range(64)]
    insert_records([dict(record(f"i{k:02d}"), seed=s) for k, s in enumerate(seeds)], db)
    assert [r["seed"] for r in fetch_records(db)] == seeds
