""" db_sqlite_results.py

Has the following functions:
- init_db(db_path, fresh): Create the 'experiment_records' table (drop it first when fresh=True).
- insert_record(record, db_path): Insert one experiment record.
- fetch_records(db_path, dataset, method): Read records back, sorted like the results CSV.

Example record
{
    "dataset": "er15_chi5",
    "method": "TabuCol",
    "instance_id": "ER-0003",
    "success": 1,
    "K": 5, "r": 5, "b": 1, "x": 5,
    "d_sym": "1/5",
    "wall_time_s": 0.0123,
    "seed": 1234
}

"""

#####################################
# Import Modules
#####################################

# import from standard library
import os
import pathlib
import sqlite3

# import from local modules
import utils.utils_config as config
from utils.utils_logger import logger

COLUMNS = ("dataset", "method", "instance_id", "success", "K", "r", "b", "x", "d_sym", "wall_time_s", "seed")

#####################################
# Define Function to Initialize SQLite Database
#####################################


def init_db(db_path: pathlib.Path, fresh: bool = False) -> None:
    """
    Initialize the SQLite database -
    create the 'experiment_records' table if it doesn't exist,
    and recreate it when fresh is True.

    Args:
    - db_path (pathlib.Path): Path to the SQLite database file.
    - fresh (bool): Drop any existing table first.
    """
    logger.info(f"Calling SQLite init_db() with {db_path=}.")
    os.makedirs(os.path.dirname(db_path), exist_ok=True)
    with sqlite3.connect(db_path) as conn:
        cursor = conn.cursor()
        if fresh:
            cursor.execute("DROP TABLE IF EXISTS experiment_records;")
        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS experiment_records (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                dataset TEXT,
                method TEXT,
                instance_id TEXT,
                success INTEGER,
                K INTEGER,
                r INTEGER,
                b INTEGER,
                x INTEGER,
                d_sym TEXT,
                wall_time_s REAL,
                seed INTEGER
            )
        """
        )
        conn.commit()
    logger.info(f"SUCCESS: Database initialized and table ready at {db_path}.")


#####################################
# Define Function to Insert a Record into the Database
#####################################


def insert_record(record: dict, db_path: pathlib.Path) -> None:
    """
    Insert a single experiment record into the SQLite database.

    Args:
    - record (dict): Row with the keys in COLUMNS.
    - db_path (pathlib.Path): Path to the SQLite database file.
    """
    logger.debug(f"Inserting {record.get('method')} record for {record.get('instance_id')} into {db_path}")
    with sqlite3.connect(str(db_path)) as conn:
        cursor = conn.cursor()
        cursor.execute(
            f"INSERT INTO experiment_records ({', '.join(COLUMNS)}) VALUES ({', '.join('?' * len(COLUMNS))})",
            tuple(record[c] for c in COLUMNS),
        )
        conn.commit()


def insert_records(records: list[dict], db_path: pathlib.Path) -> int:
    for record in records:
        insert_record(record, db_path)
    logger.info(f"Inserted {len(records)} records into {db_path}.")
    return len(records)


#####################################
# Define Function to Read Records Back
#####################################


def fetch_records(db_path: pathlib.Path, dataset: str | None = None, method: str | None = None) -> list[dict]:
    """Return stored records as dicts, optionally filtered, sorted by (dataset, method, instance_id)."""
    clauses, params = [], []
    if dataset is not None:
        clauses.append("dataset = ?")
        params.append(dataset)
    if method is not None:
        clauses.append("method = ?")
        params.append(method)
    where = f" WHERE {' AND '.join(clauses)}" if clauses else ""
    with sqlite3.connect(str(db_path)) as conn:
        cursor = conn.cursor()
        cursor.execute(
            f"SELECT {', '.join(COLUMNS)} FROM experiment_records{where} ORDER BY dataset, method, instance_id",
            params,
        )
        rows = cursor.fetchall()
    return [dict(zip(COLUMNS, row)) for row in rows]


#####################################
# Define main() function for testing
#####################################
def main():
    logger.info("Starting db testing.")

    TEST_DB_PATH: pathlib.Path = config.get_results_path() / "test_experiments.sqlite"
    init_db(TEST_DB_PATH, fresh=True)
    logger.info(f"Initialized database file at {TEST_DB_PATH}.")

    test_record = {
        "dataset": "smoke",
        "method": "SLI",
        "instance_id": "demo-0000",
        "success": 1,
        "K": 3,
        "r": 3,
        "b": 1,
        "x": 3,
        "d_sym": "1/3",
        "wall_time_s": 0.0,
        "seed": 0,
    }
    insert_record(test_record, TEST_DB_PATH)
    logger.info(f"Read back: {fetch_records(TEST_DB_PATH, dataset='smoke')}")
    logger.info("Finished testing.")


# #####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    main()
