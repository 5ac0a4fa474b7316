import json
import threading
import urllib.error
import urllib.parse
import urllib.request

import pytest

from mathgcl.index import build_index
from mathgcl.server import ServedModel, ServerState, make_server
from mathgcl.training import embed_formula


@pytest.fixture(scope="module")
def server(token_table_module, graphs_module, corpus_module):
    embs = [embed_formula(None, g, token_table_module, formula_id)
            for formula_id, g in graphs_module]
    index = build_index(embs)
    state = ServerState(
        table=token_table_module,
        models={("slt", "baseline"): ServedModel("slt", "baseline", index, None)},
        latex_by_id=dict(corpus_module),
        default_layout="slt",
        default_model="baseline",
        default_k=10,
    )
    httpd = make_server(state, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_port}"
    httpd.shutdown()


# module-scoped clones of the session fixtures (pytest forbids mixing scopes
# in the other direction)
@pytest.fixture(scope="module")
def corpus_module():
    from conftest import DATA
    from mathgcl.graphs import read_corpus
    return read_corpus(DATA / "synthetic" / "corpus.jsonl")[:30]


@pytest.fixture(scope="module")
def graphs_module(corpus_module):
    from mathgcl.graphs import latex_to_graph
    return [(formula_id, latex_to_graph(latex, "SLT"))
            for formula_id, latex in corpus_module]


@pytest.fixture(scope="module")
def token_table_module(graphs_module):
    from mathgcl.subword import SkipgramConfig, train_subword_skipgram
    from mathgcl.walks import corpus_for_graphs
    walks = corpus_for_graphs([g for _, g in graphs_module], 3, 4, seed=1)
    return train_subword_skipgram(walks, SkipgramConfig(epochs=2, seed=1))


def get(url):
    with urllib.request.urlopen(url) as resp:
        return resp.status, json.loads(resp.read())


def get_error(url):
    try:
        with urllib.request.urlopen(url) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


def test_health(server):
    status, body = get(f"{server}/health")
    assert status == 200 and body == {"status": "ok"}


def test_search_self_retrieval(server, corpus_module):
    formula_id, latex = corpus_module[0]
    q = urllib.parse.quote(latex)
    status, body = get(f"{server}/search?q={q}&k=5")
    assert status == 200
    assert body["query"] == latex
    assert body["results"][0]["id"] == formula_id
    assert abs(body["results"][0]["score"] - 1.0) <= 1e-6
    assert body["results"][0]["latex"] == latex
    scores = [r["score"] for r in body["results"]]
    assert scores == sorted(scores, reverse=True)


def test_search_parse_error_400(server):
    q = urllib.parse.quote("a^{3")
    status, body = get_error(f"{server}/search?q={q}")
    assert status == 400
    assert body["error"]["stage"] == "parse"
    assert body["error"]["type"] == "UnbalancedDelimiter"
    assert body["error"]["offset"] == 3


def test_search_unknown_model_404(server):
    q = urllib.parse.quote("a+b")
    status, body = get_error(f"{server}/search?q={q}&model=bgrl")
    assert status == 404
    status, body = get_error(f"{server}/search?q={q}&layout=opt")
    assert status == 404


def test_search_bad_k_is_400_not_500(server):
    q = urllib.parse.quote("a+b")
    status, body = get_error(f"{server}/search?q={q}&k=lots")
    assert status == 400


def test_parse_preview(server):
    q = urllib.parse.quote("a^3+b^2=0")
    status, body = get(f"{server}/parse?q={q}&layout=slt")
    assert status == 200
    assert body["graph"]["nodes"] == ["V!a", "N!3", "O!plus", "V!b", "N!2", "U!eq", "N!0"]


def test_unknown_route_404(server):
    status, _ = get_error(f"{server}/nope")
    assert status == 404


def test_concurrent_requests(server, corpus_module):
    results = []

    def worker(latex):
        q = urllib.parse.quote(latex)
        results.append(get(f"{server}/search?q={q}&k=3")[0])

    threads = [threading.Thread(target=worker, args=(latex,))
               for _, latex in corpus_module[:8]]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [200] * 8
