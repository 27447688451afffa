import socket
from pathlib import Path

import pytest

from srvscan.detectors import AnalysisContext, DetectorConfig
from srvscan.detectors.common import defs_of
from srvscan.frontend import load, locate_sinks
from srvscan.graph import build_ipdg
from srvscan.oracle import Oracle
from srvscan.slicer import function_level_slice, initial_code_block
from srvscan.taint import SrvType, default_sources, propagate

CORPUS = Path(__file__).resolve().parents[1] / "src" / "srvscan" / "corpus"
DATA = Path(__file__).resolve().parent / "data"


def corpus_file(name: str) -> Path:
    hits = sorted(CORPUS.glob(f"*/{name}"))
    assert hits, name
    return hits[0]


def unit_of(name_or_text: str, path: str = "t.sol"):
    if name_or_text.endswith(".sol"):
        p = corpus_file(name_or_text)
        return load(p.read_text(), str(p))
    return load(name_or_text, path)


def unit_and_graph(name_or_text: str):
    u = unit_of(name_or_text)
    return u, build_ipdg(u)


def contexts(name_or_text, config=None, oracle=None):
    """One detector context per sink, built the way a scan builds them."""
    config = config or DetectorConfig()
    oracle = oracle or Oracle()
    unit, graph = unit_and_graph(name_or_text)
    out = []
    for site in locate_sinks(unit):
        seed = initial_code_block(graph, unit, site)
        keys = oracle.extract_key_variables(seed.text).payload
        sl = function_level_slice(graph, unit, keys, seed)
        answer = oracle.identify_sanitized_variables(sl.text, [t.value for t in SrvType]).payload
        sanitized = {SrvType.parse(k): frozenset(v) for k, v in answer.items()}
        cuts = {SrvType.SMA: defs_of(graph, sanitized.get(SrvType.SMA, ()), sl.functions)}
        taint = propagate(graph, default_sources(graph), cuts, SrvType.SMA)
        out.append(AnalysisContext(unit, graph, site, sl, taint, sanitized, frozenset(keys), config))
    return out


class NetworkDenied(RuntimeError):
    pass


@pytest.fixture
def no_network(monkeypatch):
    """Every outbound connection attempt fails and is counted."""
    attempts = []

    def deny(*args, **kwargs):
        attempts.append(args)
        raise NetworkDenied("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", deny)
    monkeypatch.setattr(socket.socket, "connect_ex", deny)
    monkeypatch.setattr(socket, "create_connection", deny)
    monkeypatch.setattr(socket, "getaddrinfo", deny)
    return attempts


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


def corpus_constraint_sets():
    """(label, constraint set) for every path a scan of the corpus would check."""
    from srvscan.detectors import detect_all
    from srvscan.oracle import WarningRef
    from srvscan.pathcheck import PathNotFound, enumerate_path_constraints

    oracle = Oracle()
    out = []
    for path in sorted(CORPUS.glob("*/*.sol")):
        for ctx in contexts(path.name, oracle=oracle):
            for w in detect_all(ctx):
                short = w.function.rsplit(".", 1)[-1]
                answer = oracle.propose_function_sequences([WarningRef(short, w.srv_type.value)], ctx.slice.text)
                seqs = answer.payload.get(short) or [[short]]
                for seq in seqs:
                    try:
                        sets = enumerate_path_constraints(ctx.unit, ctx.graph, seq, ctx.site, w.function)
                    except PathNotFound:
                        continue
                    for k, pcs in enumerate(sets):
                        out.append((f"{path.stem}:{w.srv_type.value}:{'-'.join(seq)}:{k}", pcs))
    return out
