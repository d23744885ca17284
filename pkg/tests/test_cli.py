"""The command line driver's outputs and exit codes."""

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from greff import cli

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def invoke(*argv: str):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# run


def test_run_threads_imprecise_prints_interleaving():
    code, out, _ = invoke("run", str(CORPUS / "threads_imprecise.greff"))
    assert code == cli.EXIT_OK
    assert out.strip() == "1a2b"


def test_run_threads_precise_agrees():
    code, out, _ = invoke("run", str(CORPUS / "threads_precise.greff"))
    assert code == cli.EXIT_OK
    assert out.strip() == "1a2b"


def test_run_bad_downcast_is_a_cast_error():
    code, out, err = invoke("run", str(CORPUS / "bad_downcast.greff"))
    assert code == cli.EXIT_CAST_ERROR
    assert "cast error" in err


def test_run_bad_import_is_a_static_error():
    code, _, err = invoke("run", str(CORPUS / "bad_import.greff"))
    assert code == cli.EXIT_STATIC
    assert "static error" in err


def test_run_fuel_exhaustion(tmp_path):
    code, _, err = invoke(
        "run", str(CORPUS / "threads_precise.greff"), "--fuel", "40"
    )
    assert code == cli.EXIT_FUEL
    assert "fuel" in err


def test_run_uncaught_operation(tmp_path):
    src = tmp_path / "uncaught.greff"
    src.write_text(
        "module Ops where\n"
        "effect ping : 1 ~> 1\n\n"
        "module Main where\n"
        "import Ops.ping : 1 ~> 1\n\n"
        "define loose : 1 -[?]> 1 =\n"
        "  lambda _. ping(); ()\n\n"
        "define main : 1 =\n"
        "  loose()\n"
    )
    code, _, err = invoke("run", str(src))
    assert code == cli.EXIT_UNCAUGHT
    assert "ping" in err


def test_run_trace_logs_rules():
    code, out, err = invoke(
        "run", str(CORPUS / "threads_precise.greff"), "--trace"
    )
    assert code == cli.EXIT_OK
    assert out.strip() == "1a2b"
    assert len(err.splitlines()) > 50


# ---------------------------------------------------------------------------
# check / elab


def test_check_prints_the_typing():
    code, out, _ = invoke("check", str(CORPUS / "threads_precise.greff"))
    assert code == cli.EXIT_OK
    assert out.strip() == "[] ! str"


def test_check_rejects_bad_import():
    code, _, err = invoke("check", str(CORPUS / "bad_import.greff"))
    assert code == cli.EXIT_STATIC
    assert "ping" in err


def test_elab_prints_core():
    code, out, _ = invoke("elab", str(CORPUS / "bad_downcast.greff"))
    assert code == cli.EXIT_OK
    assert "(handle" in out and "(vdn" in out


# ---------------------------------------------------------------------------
# usage errors


def test_unknown_subcommand_is_usage():
    code, _, _ = invoke("frobnicate")
    assert code == cli.EXIT_USAGE


def test_missing_file_is_usage():
    code, _, err = invoke("run", "/no/such/file.greff")
    assert code == cli.EXIT_USAGE
    assert "cannot read" in err


def test_nonpositive_fuel_is_usage():
    code, _, _ = invoke("run", str(CORPUS / "threads_precise.greff"), "--fuel", "0")
    assert code == cli.EXIT_USAGE


def test_run_config_validates():
    with pytest.raises(ValueError):
        cli.RunConfig(fuel=0)
    with pytest.raises(ValueError):
        cli.RunConfig(cases=0)


# ---------------------------------------------------------------------------
# batches


def test_graduality_on_corpus_file():
    code, out, err = invoke(
        "graduality", str(CORPUS / "threads_precise.greff"), "--cases", "5"
    )
    assert code == cli.EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 5
    for line in lines:
        rec = json.loads(line)
        assert rec["check"] == "graduality"
        assert rec["verdict"] in ("holds", "inconclusive")
    assert "0 violations" in err


def test_graduality_is_deterministic():
    args = ("graduality", str(CORPUS / "threads_imprecise.greff"), "--cases", "4")
    one = invoke(*args)
    two = invoke(*args)
    assert one == two


def test_graduality_without_sites(tmp_path):
    src = tmp_path / "pure.greff"
    src.write_text("main {\ntrue\n}\n")
    code, out, err = invoke("graduality", str(src))
    assert code == cli.EXIT_OK
    assert out == ""
    assert "no effect annotation sites" in err


def test_conformance_batch():
    code, out, err = invoke("conformance", "--cases", "2", "--seed", "9")
    assert code == cli.EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 2 * 8
    checks = {json.loads(line)["check"] for line in lines}
    assert "factorization" in checks and "graduality" in checks
    assert "0 violations" in err


# ---------------------------------------------------------------------------
# the module entry point


def test_module_invocation_roundtrip():
    proc = subprocess.run(
        [sys.executable, "-m", "greff.cli", "run", str(CORPUS / "threads_imprecise.greff")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1a2b"
