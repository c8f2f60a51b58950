"""Runs the CLI on small inputs and validates every JSON output against its schema."""
import csv
import json
import random
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

cli, schema_dir = sys.argv[1], Path(sys.argv[2])


def run(*args):
    subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)


def check(document, schema_name):
    schema = json.loads((schema_dir / f"{schema_name}.schema.json").read_text())
    jsonschema.validate(json.loads(Path(document).read_text()), schema)
    print(f"{document}: valid {schema_name}")


with tempfile.TemporaryDirectory() as tmp:
    t = Path(tmp)
    run("simulate", "--scenario", "2", "--runs", "3", "--seed", "5", "--out", str(t / "sim"))
    check(t / "sim" / "manifest.json", "manifest")

    run("analyze", "--data", str(t / "sim" / "run_0001.csv"), "--schema", str(t / "sim" / "schema.json"),
        "--estimators", "naive,lasso", "--out", str(t / "an"))
    check(t / "an" / "report.json", "analysis_report")

    rng = random.Random(3)
    rows = list(csv.DictReader(open(t / "sim" / "run_0001.csv")))
    names = [c for c in rows[0] if c not in ("time", "event", "treatment")]
    with open(t / "binary.csv", "w") as f:
        f.write(",".join(["outcome", "treatment", *names]) + "\n")
        for r in rows:
            f.write(",".join([str(int(rng.random() < 0.4)), r["treatment"], *(r[c] for c in names)]) + "\n")
    run("analyze", "--outcome", "binary", "--data", str(t / "binary.csv"), "--schema",
        str(t / "sim" / "schema.json"), "--estimators", "lasso,ridge", "--lambda", "2", "--out", str(t / "bin"))
    check(t / "bin" / "report.json", "binary_report")

    run("oracle", "--scenario", "2", "--n-large", "20000", "--reps", "1", "--out", str(t / "oracle"))
    check(t / "oracle" / "oracle.json", "oracle")

    run("report", "--data", str(t / "sim"), "--truth", str(t / "oracle" / "oracle.json"),
        "--estimators", "naive,population", "--out", str(t / "eval"))
    check(t / "eval" / "eval_report.json", "eval_report")
