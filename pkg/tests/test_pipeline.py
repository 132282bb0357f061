import json

import pytest

from src.core.graph_io import read_gexf, write_gexf
from src.pipeline import build_parser, main
from src.utils.config_loader import CACHE_DIR_ENV, REGISTRY_URL_ENV
from tests.helpers import cran, make_graph, paper, pypi, two_cycle

ARTIFACTS = (
    "graph.gexf",
    "edges.csv",
    "build_report.txt",
    "centrality_unweighted.csv",
    "centrality_weighted.csv",
    "centrality_weighted_lcc.csv",
    "package_metrics.csv",
    "mention_stats.csv",
    "centrality_stats.csv",
    "lorenz_mentions.csv",
    "dependency_only.csv",
    "quadrants_weighted.csv",
    "cycles.csv",
    "cycles_summary.txt",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv(CACHE_DIR_ENV, raising=False)
    monkeypatch.delenv(REGISTRY_URL_ENV, raising=False)


def _run_args(inputs, out):
    return [
        "run",
        "--mentions", str(inputs["mentions"]),
        "--citations", str(inputs["citations"]),
        "--registry", str(inputs["registry"]),
        "--out", str(out),
    ]


def test_every_stage_is_a_subcommand():
    parser = build_parser()
    for command in ("fetch", "build", "analyze", "stats", "quadrants", "cycles", "run"):
        assert parser.parse_args([command]).command == command


def test_run_writes_all_artifacts(minimal_inputs, tmp_path):
    out = tmp_path / "out"
    assert main(_run_args(minimal_inputs, out)) == 0
    for name in ARTIFACTS:
        assert (out / name).exists(), name

    graph = read_gexf(out / "graph.gexf")
    assert graph.weight(paper("10.1/p"), cran("A")) == 3.0

    report = (out / "build_report.txt").read_text(encoding="utf-8")
    assert "paper: 1\nbioconductor: 0\ncran: 2\npypi: 0" in report
    assert "## missing metadata (0)" in report

    weighted = (out / "centrality_weighted.csv").read_text(encoding="utf-8").splitlines()
    assert weighted[1:3] == ["cran,A,weighted,3.0,0.6,true", "cran,B,weighted,4.0,0.8,true"]

    summary = (out / "cycles_summary.txt").read_text(encoding="utf-8")
    assert "cran loop_fraction=0.0\n" in summary
    assert "lcc_cran: 3 of 3 nodes" in summary
    assert "acyclic: true" in summary


def test_reruns_are_byte_identical(minimal_inputs, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(_run_args(minimal_inputs, first)) == 0
    assert main(_run_args(minimal_inputs, second)) == 0
    for name in ARTIFACTS:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_stages_can_run_separately(minimal_inputs, tmp_path):
    out = str(tmp_path / "out")
    build = ["build", "--mentions", str(minimal_inputs["mentions"]),
             "--citations", str(minimal_inputs["citations"]),
             "--registry", str(minimal_inputs["registry"]), "--out", out]
    assert main(build) == 0
    assert main(["analyze", "--out", out, "--variants", "weighted"]) == 0
    assert main(["quadrants", "--out", out, "--variants", "weighted", "--top-k", "1"]) == 0
    assert (tmp_path / "out" / "quadrants_weighted.csv").exists()
    assert not (tmp_path / "out" / "centrality_unweighted.csv").exists()


def test_fetch_uses_the_response_cache(minimal_inputs, tmp_path):
    cache = tmp_path / "cache" / "cran"
    cache.mkdir(parents=True)
    deps = {"A": ["B"], "B": []}
    for name, requires in deps.items():
        payload = {
            "name": name,
            "latest_release_number": "1.0",
            "dependencies": [
                {"package_name": d, "kind": "imports", "optional": False} for d in requires
            ],
        }
        (cache / f"{name}.json").write_text(json.dumps(payload), encoding="utf-8")

    out = tmp_path / "out"
    args = ["--mentions", str(minimal_inputs["mentions"]), "--out", str(out),
            "--cache-dir", str(tmp_path / "cache"), "--api-url", "http://127.0.0.1:9/api"]
    assert main(["fetch", *args]) == 0
    lines = (out / "registry.jsonl").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["name"] for line in lines] == ["A", "B"]

    assert main(["build", *args, "--citations", str(minimal_inputs["citations"])]) == 0
    assert read_gexf(out / "graph.gexf").successors(cran("A")) == [cran("B")]


def test_missing_input_exits_2(minimal_inputs, tmp_path, capsys):
    args = _run_args(minimal_inputs, tmp_path / "out")
    args[args.index("--mentions") + 1] = str(tmp_path / "nope.csv")
    assert main(args) == 2
    assert "InputFormatError" in capsys.readouterr().err


def test_bad_config_exits_2(minimal_inputs, tmp_path, write_file):
    config = write_file("run.yaml", "damping: 0.85\n")
    assert main(_run_args(minimal_inputs, tmp_path / "out") + ["--config", str(config)]) == 2
    assert main(_run_args(minimal_inputs, tmp_path / "out") + ["--beta", "-1"]) == 2


def test_analyze_without_graph_exits_2(tmp_path):
    assert main(["analyze", "--out", str(tmp_path / "out")]) == 2


def test_empty_mentions_exit_3(minimal_inputs, tmp_path, write_file):
    args = _run_args(minimal_inputs, tmp_path / "out")
    args[args.index("--mentions") + 1] = str(
        write_file("empty.csv", "paper_doi,ecosystem,package_id,package_name\n")
    )
    assert main(args) == 3


def test_divergent_katz_exits_4(tmp_path, capsys):
    graph = tmp_path / "loop.gexf"
    write_gexf(two_cycle(), graph)
    argv = ["analyze", "--graph", str(graph), "--out", str(tmp_path / "out"), "--beta", "1"]
    assert main(argv + ["--method", "iterative"]) == 4
    assert main(argv) == 4
    assert "NonConvergenceError" in capsys.readouterr().err


def test_exact_method_on_cyclic_graph_exits_4(tmp_path, capsys):
    graph = tmp_path / "loop.gexf"
    write_gexf(two_cycle(), graph)
    argv = ["analyze", "--graph", str(graph), "--out", str(tmp_path / "out"),
            "--beta", "0.25", "--method", "exact"]
    assert main(argv) == 4
    assert "CyclicGraphError" in capsys.readouterr().err


def test_cycles_on_loop_graph(tmp_path):
    graph = tmp_path / "loop.gexf"
    loops = make_graph([
        (cran("A"), cran("B"), 1), (cran("B"), cran("A"), 1), (pypi("x"), pypi("y"), 1),
    ])
    write_gexf(loops, graph)
    out = tmp_path / "out"
    assert main(["cycles", "--graph", str(graph), "--out", str(out)]) == 0
    assert (out / "cycles.csv").read_text(encoding="utf-8") == (
        "component_id,size,package_keys\n1,2,cran:A;cran:B\n"
    )
    summary = (out / "cycles_summary.txt").read_text(encoding="utf-8")
    assert "cran loop_fraction=1.0\n" in summary
    assert "pypi loop_fraction=0.0\n" in summary
    assert "bioconductor loop_fraction=0.0\n" in summary
    assert "acyclic: true" in summary


def test_cycles_reports_loop_inside_mentioned_component(tmp_path):
    graph = tmp_path / "mentioned_loop.gexf"
    mentioned_loop = make_graph([
        (paper("10.1/p"), cran("A"), 2), (cran("A"), cran("B"), 1), (cran("B"), cran("A"), 1),
    ])
    write_gexf(mentioned_loop, graph)
    out = tmp_path / "out"
    assert main(["cycles", "--graph", str(graph), "--out", str(out)]) == 0
    summary = (out / "cycles_summary.txt").read_text(encoding="utf-8")
    assert "acyclic: false\n" in summary
    assert "witness: cran:A -> cran:B -> cran:A\n" in summary


def test_fetch_lists_packages_it_could_not_reach(minimal_inputs, tmp_path, write_file, capsys):
    cache = tmp_path / "cache" / "cran"
    cache.mkdir(parents=True)
    payload = {
        "name": "A",
        "latest_release_number": "1.0",
        "dependencies": [{"package_name": "B", "kind": "imports", "optional": False}],
    }
    (cache / "A.json").write_text(json.dumps(payload), encoding="utf-8")
    config = write_file("fetch.yaml", "max_retries: 1\ndelay: 0\n")

    out = tmp_path / "out"
    argv = ["fetch", "--mentions", str(minimal_inputs["mentions"]), "--out", str(out),
            "--cache-dir", str(tmp_path / "cache"), "--api-url", "http://127.0.0.1:9/api",
            "--config", str(config)]
    assert main(argv) == 1

    err = capsys.readouterr().err
    assert "RegistryUnavailableError" in err
    assert "cran/B" in err
    lines = (out / "registry.jsonl").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["name"] for line in lines] == ["A"]
