import json
import subprocess
import sys

import numpy as np
import pytest

from planardil.cli import main, run
from planardil.pick_interpolation import extremal_s
from planardil.domain_kernels import PlanarDomain

DISK = {"kind": "disk"}
ANN = {"kind": "annulus", "inner_radius": 0.5}


def boundary_s(z1=0.3, z2=-0.2 + 0.1j):
    return float(np.sqrt(extremal_s(PlanarDomain.disk(), z1, z2).s_sq))


def job(command, payload, domain=DISK, **params):
    return {"schema": 1, "command": command, "domain": domain, "payload": payload, "params": params}


def call(tmp_path, capsys, j, *extra):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(j))
    code = main(["--job", str(path), *extra])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_contract_boundary_is_contractive(tmp_path, capsys):
    j = job("contract", {"model": "A", "z1": 0.3, "z2": [-0.2, 0.1], "s": boundary_s(), "mu": 1.0},
            sample_count=200, seed=1)
    code, out, _ = call(tmp_path, capsys, j)
    rep = json.loads(out)
    assert code == 0 and rep["result"]["verdict"]["contractive"]
    assert rep["result"]["sampling"]["max_norm"] <= 1 + 1e-9


def test_contract_inflated_is_negative(tmp_path, capsys):
    j = job("contract", {"model": "A", "z1": 0.3, "z2": [-0.2, 0.1], "s": boundary_s(), "mu": 1.05})
    assert call(tmp_path, capsys, j)[0] == 2


def test_pick_outside_ball_exit_2(tmp_path, capsys):
    j = job("pick", {"mode": "feasibility", "nodes": [0.1, [0, 0.5]], "targets": [1.2, 0]})
    code, out, _ = call(tmp_path, capsys, j)
    rep = json.loads(out)
    assert code == 2 and rep["result"]["witness"]["eigenvalue"] < 0


def test_dilate_disk_witness(tmp_path, capsys):
    j = job("dilate", {"case": "distinct", "z1": 0.3, "z2": [-0.2, 0.1], "mu": 0.7})
    code, out, _ = call(tmp_path, capsys, j)
    rep = json.loads(out)
    assert code == 0 and rep["result"]["witness"]["defect"] <= 1e-6


def test_kernel_verify_and_csv(tmp_path, capsys):
    j = job("kernel", {"mode": "verify", "shift": 0.25}, ANN, N=200, quadrature=512)
    code, out, _ = call(tmp_path, capsys, j)
    assert code == 0 and json.loads(out)["result"]["defect"] < 1e-8
    csv = tmp_path / "k.csv"
    j = job("kernel", {"mode": "eval", "pairs": [[0.1, [0, 0.2]], [0.3, 0.4]]})
    code, _, _ = call(tmp_path, capsys, j, "--csv", str(csv))
    lines = csv.read_text().splitlines()
    assert code == 0 and lines[0] == "re_z,im_z,re_w,im_w,re_K,im_K" and len(lines) == 3


def test_charfn_and_equivalence(tmp_path, capsys):
    csv = tmp_path / "t.csv"
    j = job("charfn", {"z1": 0.3, "z2": [-0.2, 0.1], "mu": 0.3, "compare_mu": [0, 0.3]}, points=16)
    code, out, _ = call(tmp_path, capsys, j, "--csv", str(csv))
    rep = json.loads(out)["result"]
    assert code == 0 and rep["inner_defect"] < 1e-10 and rep["equivalence"]["equivalent"]
    assert len(csv.read_text().splitlines()) == 17


def test_charfn_annulus_rejected(tmp_path, capsys):
    j = job("charfn", {"z1": 0.7, "z2": -0.7, "mu": 0.3}, ANN)
    code, _, err = call(tmp_path, capsys, j)
    assert code == 1 and json.loads(err)["path"] == "/domain/kind"


def test_factorize_and_opspace(tmp_path, capsys):
    # the critical off-diagonal entry for these nodes on the annulus is about 0.0036
    T = [[0.7, 0.0], [0.002, -0.6]]
    code, out, _ = call(tmp_path, capsys, job("factorize", {"matrix": T}, ANN))
    rep = json.loads(out)["result"]
    assert code == 0 and rep["scan"]["verdict"] == "certified-dilatable"
    assert rep["embedding"]["gram_defect"] < 1e-8
    T_over = [[0.7, 0.0], [0.1, -0.6]]
    assert call(tmp_path, capsys, job("factorize", {"matrix": T_over}, ANN))[0] == 2
    j = job("opspace-experiment", {"matrix": T, "levels": [1, 2]}, DISK, sample_count=50, seed=4)
    code, out, _ = call(tmp_path, capsys, j)
    assert code == 0 and len(json.loads(out)["result"]["bounds"]) == 2


def test_factorize_without_certificate_exit_2(tmp_path, capsys):
    s = boundary_s()
    T = [[0.3, 0.0], [1.05 * s * 0.5, [-0.2, 0.1]]]
    assert call(tmp_path, capsys, job("factorize", {"matrix": T}))[0] == 2


@pytest.mark.parametrize(
    "bad, path",
    [
        ({"schema": 2}, "/schema"),
        ({"payload": {"model": "A", "z1": 0.3, "z2": 0.1, "s": 1.0, "mu": "x"}}, "/payload/mu"),
        ({"payload": {"model": "A", "z1": 0.3, "z2": 0.1, "s": -1.0, "mu": 1.0}}, "/payload/s"),
        ({"domain": {"kind": "annulus"}}, "/domain"),
        ({"params": {"sample_count": 5}}, "/params/seed"),
    ],
)
def test_malformed_jobs_point_at_field(tmp_path, capsys, bad, path):
    j = job("contract", {"model": "A", "z1": 0.3, "z2": 0.1, "s": 1.0, "mu": 1.0})
    j.update(bad)
    code, _, err = call(tmp_path, capsys, j)
    assert code == 1 and json.loads(err)["path"] == path


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text("{not json")
    assert main(["--job", str(path)]) == 1
    assert json.loads(capsys.readouterr().err)["path"] == "/"


def test_sampling_command_needs_seed():
    from planardil.cli import JobError

    with pytest.raises(JobError):
        run(job("opspace-experiment", {"matrix": [[0.1, 0], [0, 0.2]]}))


def test_conditioning_exit_3(tmp_path, capsys):
    T = [[0.2, 1.0], [0.0, 0.2 + 1e-10]]
    assert call(tmp_path, capsys, job("factorize", {"matrix": T}))[0] == 3


def test_seed_override_and_command_positional(tmp_path, capsys):
    j = job("kernel", {"matrix": [[0.2, 0.0], [0.1, -0.3]], "levels": [1]}, sample_count=20)
    code, out, _ = call(tmp_path, capsys, j, "opspace-experiment", "--seed-override", "7")
    rep = json.loads(out)
    assert code == 0 and rep["params"]["seed"] == 7 and rep["command"] == "opspace-experiment"


def test_deterministic_bytes(tmp_path):
    j = job("opspace-experiment", {"matrix": [[0.7, 0.0], [0.1, -0.6]], "levels": [1, 2]},
            ANN, sample_count=30, seed=3)
    jp = tmp_path / "job.json"
    jp.write_text(json.dumps(j))
    outs = []
    for k, threads in enumerate([1, 1, 3]):
        o = tmp_path / f"out{k}.json"
        main(["--job", str(jp), "--out", str(o), "--threads", str(threads)])
        outs.append(o.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_module_entry_point_stdin():
    j = job("pick", {"mode": "extremal_t", "z": 0.5})
    res = subprocess.run([sys.executable, "-m", "planardil"], input=json.dumps(j),
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert abs(json.loads(res.stdout)["result"]["t"] - 0.75) < 1e-12
