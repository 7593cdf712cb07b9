"""End-to-end checks of the prldpc command line: exit codes, determinism and schema conformance."""

import json
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

CLI = Path(sys.argv.pop(1))
SCHEMAS = Path(sys.argv.pop(1))


def load_registry():
    resources = []
    for path in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(path.read_text())
        resources.append((path.name, Resource.from_contents(doc)))
    return Registry().with_resources(resources)


REGISTRY = load_registry()


def validate(doc, name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator(schema, registry=REGISTRY).validate(doc)


def run(*args, expect=0):
    proc = subprocess.run([str(CLI), *args], capture_output=True, text=True)
    if proc.returncode != expect:
        raise AssertionError(f"{args}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc


def run_json(*args):
    return json.loads(run(*args).stdout)


class CodeInfo(unittest.TestCase):
    def test_rates(self):
        for name, rate in [("mackay_495_433", 0.875), ("margulis_2640_1320", 0.5), ("toy_3_1", 1 / 3)]:
            doc = run_json("code-info", name)
            validate(doc, "code-info")
            self.assertAlmostEqual(doc["rate"], rate, places=3)

    def test_regular_code(self):
        doc = run_json("code-info", "margulis_2640_1320")
        self.assertTrue(doc["regular"])
        self.assertEqual(doc["var_degrees"], {"3": 2640})
        self.assertEqual(doc["check_degrees"], {"6": 1320})

    def test_missing_code(self):
        run("code-info", "no_such_code", expect=2)


class PredictOps(unittest.TestCase):
    def test_counts(self):
        doc = run_json("predict-ops")
        validate(doc, "predict-ops")
        self.assertEqual(doc["prbp"]["total"], {"mults": 520, "adds": 360})
        self.assertEqual(doc["prbp"]["per_iteration"], {"mults": 26, "adds": 18})
        self.assertEqual(doc["turbo"], {"mults": 486, "adds": 135})
        self.assertEqual(doc["bcjr"], {"mults": 18, "adds": 9})

    def test_measured(self):
        doc = run_json("predict-ops", "--measure", "margulis_2640_1320")
        validate(doc, "predict-ops")
        self.assertEqual(doc["measured"]["prbp"], {"mults": 520.0, "adds": 360.0})
        self.assertEqual(doc["measured"]["turbo"], {"mults": 486.0, "adds": 135.0})

    def test_bad_schedule(self):
        run("predict-ops", "--schedule", "three", expect=1)


class Decode(unittest.TestCase):
    def test_reproducible(self):
        args = ("decode", "--code", "mackay_495_433", "--snr", "5", "--seed", "4", "--trial", "3")
        a, b = run_json(*args), run_json(*args)
        validate(a, "decode")
        self.assertEqual(a, b)

    def test_memoryless_prbp_matches_sum_product(self):
        common = ("decode", "--code", "margulis_2640_1320", "--snr", "1.5", "--seed", "2", "--no-early-stop")
        a = run_json(*common, "--target", "1", "--decoder", "prbp")
        b = run_json(*common, "--decoder", "sumproduct")
        worst = max(abs(x - y) for x, y in zip(a["lambdas"], b["lambdas"]))
        self.assertLessEqual(worst, 1e-12)

    def test_high_snr_converges(self):
        doc = run_json("decode", "--code", "mackay_495_433", "--target", "1", "--snr", "40")
        self.assertTrue(doc["converged"])
        self.assertEqual(doc["hard_bits"], doc["codeword"])
        self.assertEqual(doc["iterations"], 1)

    def test_turbo(self):
        doc = run_json("decode", "--code", "margulis_2640_1320", "--decoder", "turbo", "--snr", "8")
        validate(doc, "decode")
        self.assertTrue(doc["converged"])

    def test_trace(self):
        with tempfile.TemporaryDirectory() as tmp:
            trace = Path(tmp) / "trace.csv"
            doc = run_json("decode", "--code", "mackay_495_433", "--snr", "6", "--trace", str(trace))
            lines = trace.read_text().splitlines()
            self.assertEqual(lines[0], "iteration,min_abs_eta,max_abs_eta,mean_abs_eta,syndrome_weight")
            self.assertEqual(len(lines), doc["iterations"] + 1)
        run("decode", "--code", "mackay_495_433", "--snr", "6", "--decoder", "turbo", "--trace", "x.csv", expect=1)

    def test_usage_errors(self):
        run("decode", "--bogus", expect=1)
        run("decode", "--code", "toy_3_1", "--snr", "3", "--pad", "3", expect=1)
        run("decode", "--code", "toy_3_1", "--snr", "3", "--decoder", "viterbi", expect=1)
        run(expect=1)


class Ber(unittest.TestCase):
    def test_sweep(self):
        with tempfile.TemporaryDirectory() as tmp:
            args = ("ber", "--code", "mackay_495_433", "--snr", "4,6", "--max-codewords", "30",
                    "--min-bit-errors", "10", "--out-dir", tmp)
            summary = run_json(*args, "--name", "a")
            validate(summary, "ber")
            self.assertEqual(summary["points"], 2)
            side = json.loads(Path(summary["json"]).read_text())
            validate(side, "ber-sidecar")
            self.assertTrue(side["complete"])
            run_json(*args, "--name", "b", "--threads", "2")
            self.assertEqual((Path(tmp) / "a.csv").read_bytes(), (Path(tmp) / "b.csv").read_bytes())

    def test_config_file_and_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "run.json"
            cfg.write_text(json.dumps({"code": "toy_3_1", "snr_db": [2.0], "iterations": 7, "seed": 5}))
            shown = json.loads(run("ber", "--config", str(cfg), "--seed", "6", "--show-config").stdout)
            validate(shown, "config")
            self.assertEqual(shown["iterations"], 7)
            self.assertEqual(shown["seed"], 6)
            cfg.write_text(json.dumps({"code": "toy_3_1", "colour": "blue"}))
            run("ber", "--config", str(cfg), expect=1)

    def test_resume_refuses_other_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            args = ("ber", "--code", "toy_3_1", "--snr", "2", "--max-codewords", "5", "--out-dir", tmp)
            run(*args)
            run(*args, "--resume")
            run(*args, "--seed", "9", "--resume", expect=2)


class OracleCheck(unittest.TestCase):
    def test_default_batch(self):
        doc = run_json("oracle-check", "--count", "25")
        validate(doc, "oracle-check")
        self.assertEqual(doc["instances"], 50)
        self.assertTrue(doc["within_thresholds"])

    def test_empty_and_memoryless(self):
        doc = run_json("oracle-check", "--count", "0")
        self.assertEqual(doc["instances"], 0)
        doc = run_json("oracle-check", "--count", "10", "--targets", "1")
        self.assertTrue(doc["within_thresholds"])

    def test_size_guard(self):
        run("oracle-check", "--size", "17", expect=1)


if __name__ == "__main__":
    unittest.main(verbosity=2)
