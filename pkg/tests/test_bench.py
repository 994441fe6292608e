import json

import numpy as np
import pytest

from layersim.bench import (
    CROSSOVER_COLUMNS,
    CSV_COLUMNS,
    BenchConfig,
    build_circuit,
    compare_backends,
    crossover_path,
    load_params,
    parse_circuit,
    run_benchmark,
)
from layersim.circuits import PatternKind, Role
from layersim.cli import main
from layersim.gates import GateKind


class FakeClock:
    def __init__(self, step=1e-6):
        self.now = 0.0
        self.step = step

    def __call__(self):
        self.now += self.step
        return self.now


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_vq_layer_count_at_default_depth():
    c = build_circuit("vq", 4)
    assert len(c.layers) == 2 + 8 * 3 == 26


def test_vq_encoding_only_in_first_block():
    c = build_circuit("vq", 4, blocks=3)
    roles = [l.role for l in c.layers if l.gate is GateKind.RZ]
    assert roles == [Role.ENCODING, Role.TRAINABLE, Role.TRAINABLE]


def test_qdi_reencodes_every_block():
    c = build_circuit("qdi", 4, blocks=8)
    enc = [l for l in c.layers if l.role is Role.ENCODING]
    assert len(enc) == 8
    assert all(l.gate is GateKind.RZ for l in enc)


def test_ibm_block_structure():
    c = build_circuit("ibm", 5, blocks=2)
    gates = [l.gate for l in c.layers]
    block = [GateKind.RZ, GateKind.SX, GateKind.RZ, GateKind.X, GateKind.ECR]
    assert gates == block * 2
    ecr = [l for l in c.layers if l.gate is GateKind.ECR]
    assert all(l.pattern.kind is PatternKind.CHAIN_PAIRS for l in ecr)


def test_ionq_uses_native_gates():
    c = build_circuit("ionq", 4, blocks=3)
    assert {l.gate for l in c.layers} <= {
        GateKind.GPI, GateKind.GPI2, GateKind.RZ, GateKind.RZZ
    }
    rzz = [l for l in c.layers if l.gate is GateKind.RZZ]
    assert len(rzz) == 3
    assert all(l.role is Role.TRAINABLE for l in rzz)


def test_build_circuit_rejects_bad_input():
    with pytest.raises(ValueError):
        build_circuit("mystery", 4)
    with pytest.raises(ValueError):
        build_circuit("vq", 1)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig("nope", (3,), (1,))
    with pytest.raises(ValueError):
        BenchConfig("vq", (), (1,))
    with pytest.raises(ValueError):
        BenchConfig("vq", (3,), (1,), blocks=0)


def test_run_benchmark_row_layout(tmp_path):
    out = tmp_path / "results.csv"
    config = BenchConfig(
        "qdi", (2, 3), (1, 2), blocks=2, reps=2, warmup=1, out=str(out)
    )
    rows = run_benchmark(config, timer=FakeClock())
    assert len(rows) == 2 * 2 * 3  # qubits x batches x phases
    keys = [(r[0], r[1], r[2], r[3]) for r in rows]
    assert keys == sorted(keys)
    phases = {r[3] for r in rows}
    assert phases == {"forward", "backward", "total"}
    assert all(r[4] == "autotuned" for r in rows)

    header, data = read_csv(out)
    assert tuple(header) == CSV_COLUMNS
    assert len(data) == len(rows)

    cheader, cdata = read_csv(crossover_path(out))
    assert tuple(cheader) == CROSSOVER_COLUMNS
    assert {row[3] for row in cdata} == {"rz", "ry", "cnot"}


def test_run_benchmark_is_deterministic(tmp_path):
    out = tmp_path / "r.csv"
    config = BenchConfig("vq", (3,), (1,), blocks=1, reps=2, warmup=0, out=str(out))
    run_benchmark(config, timer=FakeClock())
    first = out.read_bytes()
    run_benchmark(config, timer=FakeClock())
    assert out.read_bytes() == first


def test_capacity_overflow_skips_and_reports(tmp_path, capsys):
    out = tmp_path / "r.csv"
    config = BenchConfig(
        "vq", (2, 31), (1,), blocks=1, reps=1, warmup=0, out=str(out)
    )
    rows = run_benchmark(config, timer=FakeClock())
    err = capsys.readouterr().err
    assert "n=31" in err and "skipping" in err
    assert {r[1] for r in rows} == {2}
    assert len(rows) == 3


def test_compare_backends_times_every_backend():
    from layersim.backend import available_backends

    rows = compare_backends(n=3, batch=2, blocks=1, reps=1, warmup=0,
                            timer=FakeClock())
    assert [r[0] for r in rows[::2]] == list(available_backends())
    assert all(r[1] in ("forward", "total") for r in rows)


CIRCUIT_DOC = {
    "n": 3,
    "layers": [
        {"gate": "ry", "pattern": "all", "role": "trainable"},
        {"gate": "cnot", "pattern": "ring"},
        {"gate": "rz", "pattern": "all", "role": "encoding"},
        {"gate": "rzz", "pattern": "explicit", "wires": [[0, 2]],
         "role": "fixed", "values": [[0.3]]},
    ],
}


def test_parse_circuit_roundtrip():
    c = parse_circuit(json.dumps(CIRCUIT_DOC))
    assert c.n == 3
    assert [l.gate.value for l in c.layers] == ["ry", "cnot", "rz", "rzz"]
    assert c.layers[3].pattern.wires == ((0, 2),)
    assert c.layers[3].values == ((0.3,),)


def test_parse_circuit_errors_name_the_layer():
    with pytest.raises(ValueError, match="'n'"):
        parse_circuit(json.dumps({"layers": []}))
    bad_gate = {"n": 2, "layers": [{"gate": "teleport", "pattern": "all"}]}
    with pytest.raises(ValueError, match="layer 0"):
        parse_circuit(json.dumps(bad_gate))
    missing_role = {"n": 2, "layers": [{"gate": "ry", "pattern": "all"}]}
    with pytest.raises(ValueError, match="layer 0"):
        parse_circuit(json.dumps(missing_role))


def test_load_params_shapes(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps({
        "trainable": [0.1, 0.2],
        "encoding": [[0.5, 0.6], [0.7, 0.8]],
    }))
    trainable, encoding = load_params(path)
    assert trainable.shape == (2,)
    assert encoding.shape == (2, 2)

    path.write_text(json.dumps({"encoding": [0.5, 0.6]}))
    with pytest.raises(ValueError, match="matrix"):
        load_params(path)

    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ValueError, match="object"):
        load_params(path)


def write_run_inputs(tmp_path, n=3):
    doc = dict(CIRCUIT_DOC, n=n)
    circuit = tmp_path / "circuit.json"
    circuit.write_text(json.dumps(doc))
    params = tmp_path / "params.json"
    params.write_text(json.dumps({
        "trainable": [0.3, -0.2, 1.0],
        "encoding": [[0.1, 0.4, -0.9], [0.0, 0.0, 0.0]],
    }))
    return circuit, params


def test_cli_run_prints_one_value_per_row(tmp_path, capsys):
    circuit, params = write_run_inputs(tmp_path)
    code = main(["run", "--circuit", str(circuit), "--params", str(params)])
    assert code == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2
    values = [float(v) for v in out]
    assert all(np.isfinite(values))


def test_cli_run_missing_file_is_exit_2(tmp_path):
    code = main(["run", "--circuit", str(tmp_path / "nope.json")])
    assert code == 2


def test_cli_run_bad_json_is_exit_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert main(["run", "--circuit", str(path)]) == 2


def test_cli_run_capacity_is_exit_3(tmp_path, capsys):
    circuit = tmp_path / "big.json"
    circuit.write_text(json.dumps({
        "n": 40,
        "layers": [{"gate": "h", "pattern": "all"}],
    }))
    assert main(["run", "--circuit", str(circuit)]) == 3


def test_cli_plan_then_bench_replay(tmp_path, capsys):
    plan_file = tmp_path / "plan.json"
    code = main([
        "plan", "--family", "qdi", "--qubits", "3", "--batch", "2",
        "--blocks", "1", "--reps", "1", "--warmup", "0",
        "--out", str(plan_file),
    ])
    assert code == 0
    assert plan_file.exists()

    out = tmp_path / "results.csv"
    code = main([
        "bench", "--family", "qdi", "--qubits", "3", "--batch", "2",
        "--blocks", "1", "--reps", "1", "--warmup", "0",
        "--out", str(out), "--plan", str(plan_file),
    ])
    assert code == 0
    header, data = read_csv(out)
    assert {row[4] for row in data} == {"file"}


def test_cli_bench_plan_mismatch_is_exit_2(tmp_path, capsys):
    plan_file = tmp_path / "plan.json"
    main([
        "plan", "--family", "qdi", "--qubits", "3", "--batch", "1",
        "--blocks", "1", "--reps", "1", "--warmup", "0",
        "--out", str(plan_file),
    ])
    code = main([
        "bench", "--family", "qdi", "--qubits", "4", "--batch", "1",
        "--blocks", "1", "--reps", "1", "--warmup", "0",
        "--out", str(tmp_path / "r.csv"), "--plan", str(plan_file),
    ])
    assert code == 2


def test_cli_rejects_unknown_family(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--family", "zz", "--qubits", "3",
              "--out", str(tmp_path / "r.csv")])
    assert exc.value.code == 2


def test_cli_backends_smoke(capsys):
    code = main(["backends", "--qubits", "3", "--batch", "1",
                 "--blocks", "1", "--reps", "1", "--warmup", "0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "forward" in out and "total" in out
