#!/usr/bin/env python3
"""Runs the sobrem CLI on every sample config and a set of failure cases,
checks exit codes and validates every JSON output against its schema.

usage: cli_schemas.py <sobrem binary> <schema dir> <sample dir> <scratch dir>
"""

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

cli, schema_dir, sample_dir, scratch = (Path(a) for a in sys.argv[1:5])
schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
for s in schemas.values():
    jsonschema.Draft202012Validator.check_schema(s)



def without_required(node):
    if isinstance(node, dict):
        return {k: without_required(v) for k, v in node.items() if k != "required"}
    if isinstance(node, list):
        return [without_required(v) for v in node]
    return node


# Sample configs are partial; the CLI fills in defaults before echoing the full config.
schemas["partial_config"] = without_required(schemas["config"])

shutil.rmtree(scratch, ignore_errors=True)
scratch.mkdir(parents=True)
failures = []


def run(args, expect, label):
    r = subprocess.run([str(cli), *args], capture_output=True, text=True, timeout=300)
    if r.returncode != expect:
        failures.append(f"{label}: exit {r.returncode}, expected {expect}\n{r.stderr.strip()}")
    return r


def validate(doc, schema, label):
    errors = sorted(jsonschema.Draft202012Validator(schemas[schema]).iter_errors(doc), key=str)
    for e in errors[:5]:
        failures.append(f"{label}: {'/'.join(map(str, e.absolute_path))}: {e.message}")


def check_outputs(paths, command, label):
    if not paths:
        failures.append(f"{label}: no files reported")
    for p in map(Path, paths):
        if not p.is_file():
            failures.append(f"{label}: reported file {p} is missing")
            continue
        if p.suffix == ".json":
            doc = json.loads(p.read_text())
            validate(doc, command, label)
            validate(doc["config"], "config", label + " (echoed config)")
        elif p.suffix == ".csv":
            rows = list(csv.reader(p.open()))
            if len(rows) < 2 or not all(len(r) == len(rows[0]) for r in rows):
                failures.append(f"{label}: {p.name} is not a rectangular CSV with data")
        elif p.suffix == ".pgm" and not p.read_bytes().startswith(b"P5"):
            failures.append(f"{label}: {p.name} is not a binary PGM")
        elif p.suffix == ".rle" and p.read_bytes()[:1] != b"\xb1":
            failures.append(f"{label}: {p.name} lacks the run-length magic byte")


samples = sorted(sample_dir.glob("*.json"))
if not samples:
    failures.append("no sample configs found")
for sample in samples:
    command = sample.stem.split("_")[0]
    out = scratch / sample.stem
    validate(json.loads(sample.read_text()), "partial_config", sample.name)
    printed = run([command, "-c", str(sample), "--print-config"], 0, sample.name + " --print-config")
    if printed.returncode == 0:
        validate(json.loads(printed.stdout), "config", sample.name + " --print-config")
    r = run([command, "-c", str(sample), "-o", str(out)], 0, sample.name)
    if r.returncode == 0:
        check_outputs(r.stdout.split(), command, sample.name)

# Non-convergence still writes a valid report.
out = scratch / "noconv"
r = run(["cap", "disk", "center=[0.5,0.5]", "radius=0.3", "p=3", "capacity.max_iterations=1",
         "capacity.kkt_tol=1e-14", "-o", str(out)], 3, "iteration cap")
check_outputs(r.stdout.split(), "cap", "iteration cap")

bad_config = scratch / "bad.json"
bad_config.write_text('{"set": {"kind": "disk"}, "pee": 2}')
for args, code, label in [
    (["cap", "-c", str(bad_config)], 2, "unknown top-level key"),
    (["cap", "blob"], 2, "unknown set kind"),
    (["cap", "disk", "center=[0.5,0.5]", "radius=0.3", "p=1"], 2, "p <= 1"),
    (["dim", "disk", "center=[0.5,0.5]", "radius=2"], 2, "set outside the box"),
    (["gen"], 2, "missing set"),
    (["cap", "-c", str(scratch / "missing.json")], 4, "missing config file"),
    (["gen", "bitmap", "path=" + str(scratch / "missing.pgm")], 4, "missing bitmap"),
    (["acl", "acl.function=csv", "acl.input=" + str(scratch / "missing.csv")], 4, "missing trace"),
    (["scan", "--no-such-flag"], 2, "unknown flag"),
    ([], 2, "no subcommand"),
]:
    run(args, code, label)

for f in failures:
    print("FAIL", f)
print(f"{len(samples)} samples, {len(failures)} failures")
sys.exit(1 if failures else 0)
