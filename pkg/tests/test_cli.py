from __future__ import annotations

import json
import subprocess
import sys

import pytest

from catengine import cli


@pytest.fixture()
def run(capsys):
    def _run(*argv):
        code = cli.main(list(argv))
        out = capsys.readouterr().out
        return code, out

    return _run


def test_validate_exit_zero(run):
    code, out = run("validate", "ONE")
    assert code == 0
    assert json.loads(out)["valid"] is True


def test_validate_bad_input_exit_two(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"objects": ["A"], "morphisms": [], "identities": {}}))
    code, _ = run("validate", str(bad))
    assert code == 2
    code2, _ = run("validate", "NO_SUCH_CATEGORY")
    assert code2 == 2


def test_check_flat_failure_exit_one_with_witness(run, tmp_path):
    f = tmp_path / "delta1.json"
    f.write_text(json.dumps({"name": "Delta1", "values": {"A": ["*"], "B": ["*"]}, "maps": {}}))
    code, out = run("check-flat", "--category", "DISC2", "--functor", str(f))
    assert code == 1
    report = json.loads(out)
    assert report["verdict"]["failing_weight"]["diagram"] == "empty"


def test_check_flat_replay_witness(run, tmp_path):
    # the witness names a diagram that reproduces the failure in isolation
    f = tmp_path / "delta1.json"
    f.write_text(json.dumps({"name": "Delta1", "values": {"A": ["*"], "B": ["*"]}, "maps": {}}))
    _, out = run("check-flat", "--category", "DISC2", "--functor", str(f))
    witness = json.loads(out)["verdict"]["failing_weight"]
    from catengine import corpus, fincat as fc, presheaf as ps, flatness as fl

    DISC2 = corpus.load("DISC2")
    assert witness["diagram"] == "empty"
    replay = fl.is_flat_set_valued(
        ps.constant_set_functor(DISC2), diagrams=[fc.empty_diagram(DISC2)]
    )
    assert not replay.flat


def test_build_completion_and_verify(run, tmp_path):
    out_file = tmp_path / "par_pret.json"
    code, _ = run("build-completion", "--category", "PAR", "--flavor", "pret", "--out", str(out_file))
    assert code == 0 and out_file.exists()
    code2, out2 = run("verify-axioms", "--completion", str(out_file), "--flavor", "reg")
    report = json.loads(out2)
    assert "limits" in report["checks"]


def test_fam_battery_exit_codes(run):
    code, _ = run("verify-axioms", "--category", "DISC2", "--flavor", "fam_f")
    assert code == 0
    code2, out2 = run("verify-axioms", "--category", "PAR", "--flavor", "fam_f")
    assert code2 == 1
    assert json.loads(out2)["checks"]["limits"]["witness"] == "terminal"


def test_ultraproduct_command(run):
    code, out = run(
        "ultraproduct", "--host", "DISC2", "--family", "x0:A,x1:B", "--ultrafilter", "principal:x0"
    )
    assert code == 0
    report = json.loads(out)
    assert report["universal_ultraproduct"] == "A"
    assert report["cross_checks"]["sigma_agrees"] is True


def test_ultraproduct_bound_exit_three(run):
    family = ",".join(f"x{i}:A" for i in range(11))
    code, _ = run("ultraproduct", "--host", "DISC2", "--family", family, "--ultrafilter", "principal:x0")
    assert code == 3


def test_dot_outputs(run, tmp_path):
    _, out = run("validate", "ONE", "--format", "dot")
    assert out.count('";') == 1 and "->" not in out
    _, out2 = run("validate", "PAR", "--format", "dot")
    assert out2.count("->") == 2
    f = tmp_path / "homA.json"
    f.write_text(
        json.dumps(
            {
                "name": "homA",
                "values": {"A": ["1A"], "B": ["u", "v"]},
                "maps": {"u": {"1A": "u"}, "v": {"1A": "v"}},
            }
        )
    )
    code, out3 = run("check-flat", "--category", "PAR", "--functor", str(f), "--format", "dot")
    assert code == 0
    assert out3.count('";') == 3 and out3.count("->") == 2


def test_localize_command(run, tmp_path):
    cong = tmp_path / "cong.json"
    cong.write_text(json.dumps({"members": ["1A", "1B", "u"], "kind": "pullback"}))
    code, out = run(
        "localize", "--category", "ARROW", "--congruence", str(cong),
        "--check-universal", "--targets", "ONE,DISC2",
    )
    assert code == 0
    assert json.loads(out)["universal_check"]["passed"] is True


def test_orthogonality_command(run, tmp_path):
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"vertex": "0", "legs": []}))
    code, _ = run("orthogonality", "--host", "/dev/null/none", "--cone", str(cone))
    assert code == 2


def test_analyze_limits(run):
    code, out = run("analyze-limits", "PAR", "--mode", "weak")
    assert code == 0
    report = json.loads(out)
    assert report["reports"]["weak"]["passed"] is False
    assert report["reports"]["weak"]["witness"] == "[A,B|u,v]"


def test_report_deterministic(run):
    _, out1 = run("report", "--seed", "7")
    _, out2 = run("report", "--seed", "7")
    assert out1 == out2
    assert json.loads(out1)["seed"] == 7


def test_cli_subprocess_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "catengine.cli", "validate", "Z2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["morphisms"] == 2


def test_analyze_limits_weight_dot(run):
    code, out = run("analyze-limits", "PAR", "--mode", "weak", "--diagram", "empty", "--format", "dot")
    assert code == 0
    assert out.count('";') == 2 and out.count("->") == 2  # two cones, two comparisons


def test_check_flat_completion_valued_functor(run, tmp_path):
    comp = tmp_path / "pret.json"
    code, _ = run("build-completion", "--category", "PAR", "--flavor", "pret", "--out", str(comp))
    assert code == 0
    # the inclusion of PAR into its completion, written by object/morphism names
    report = json.loads(comp.read_text())
    from catengine import completions as cp, corpus

    E = cp.completion_from_json(report)
    PAR = corpus.load("PAR")
    fd, _ = E.inclusion()
    Ecat = E.as_category()
    functor = {
        "name": "K",
        "objects": {PAR.objects[a]: Ecat.objects[fd.object_map[a]] for a in range(2)},
        "morphisms": {
            PAR.morphisms[m]: Ecat.morphisms[fd.morphism_map[m]] for m in range(4)
        },
    }
    ffile = tmp_path / "K.json"
    ffile.write_text(json.dumps(functor))
    code, out = run(
        "check-flat", "--category", "PAR", "--functor", str(ffile),
        "--target", str(comp), "--method", "fc",
    )
    assert code == 0
    assert json.loads(out)["verdict"]["flat"] is True


def test_sketch_models_with_limit_specs(run, tmp_path):
    sketch = tmp_path / "sk.json"
    sketch.write_text(
        json.dumps(
            {
                "limits": [
                    {"kind": "terminal", "apex": "B"},
                    {"kind": "product", "apex": "A", "legs": ["1A", "1A"]},
                ],
                "coproducts": [],
                "fc_epis": [],
            }
        )
    )
    code, out = run("sketch-models", "--category", "ARROW", "--sketch", str(sketch), "--value-bound", "2")
    assert code == 0
    assert json.loads(out)["count"] == 2  # the two finite-limit-preserving functors


def test_universal_property_cli_other_flavors(run):
    code, out = run("universal-property", "--category", "ONE", "--flavor", "reg", "--value-bound", "2")
    assert code == 0
    assert json.loads(out)["correspondence"] is True


def test_orthogonality_command_success(run, tmp_path):
    comp = tmp_path / "pret.json"
    assert run("build-completion", "--category", "DISC2", "--flavor", "pret", "--out", str(comp))[0] == 0
    from catengine import completions as cp

    E = cp.completion_from_json(json.loads(comp.read_text()))
    cat = E.as_category()
    # a cone with a single identity leg is orthogonal against everything
    vertex = 0
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"vertex": cat.objects[vertex], "legs": [cat.morphisms[cat.identity[vertex]]]}))
    code, out = run("orthogonality", "--host", str(comp), "--cone", str(cone))
    assert code == 0
    results = json.loads(out)["results"]
    assert all(v["orthogonal"] and v["injective"] for v in results.values())
