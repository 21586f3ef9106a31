import datetime as dt
import http.server
import json
import threading

import pytest
from hypothesis import given, strategies as st

from bitextkit.document import Document, document_id, normalize_url
from bitextkit.errors import BadDate, ExtractionFailed, FetchFailed, HostNotAllowed
from bitextkit.ingest import (
    Fetcher, Frontier, Politeness, RawPage, SiteRules, crawl, extract_document, extract_switch_url,
    load_documents, load_pages, parse_date, store_documents, store_pages,
)


class StubHandler(http.server.BaseHTTPRequestHandler):
    routes = {}  # path -> list of (status, body) served in turn, the last one repeating
    hits = {}

    def do_GET(self):
        self.hits[self.path] = self.hits.get(self.path, 0) + 1
        answers = self.routes.get(self.path, [(404, "missing")])
        status, body = answers[min(self.hits[self.path], len(answers)) - 1]
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub():
    StubHandler.routes, StubHandler.hits = {}, {}
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


@pytest.fixture
def rules(fixtures):
    return SiteRules.load(fixtures / "news.yaml")


def test_fetch_happy_path(stub):
    _, base = stub
    StubHandler.routes["/a.html"] = [(200, "<p>olá</p>")]
    page = Fetcher(["127.0.0.1"], Politeness(delay_ms=0)).fetch(base + "/a.html", "pt")
    assert (page.status, page.body, page.lang_hint.value) == (200, "<p>olá</p>", "pt")
    assert page.url == normalize_url(base + "/a.html")


def test_fetch_host_not_allowed(stub):
    _, base = stub
    with pytest.raises(HostNotAllowed):
        Fetcher(["example.org"], Politeness(delay_ms=0)).fetch(base + "/a.html")
    assert StubHandler.hits == {}


def test_fetch_gives_up_after_max_retries(stub):
    _, base = stub
    StubHandler.routes["/flaky"] = [(500, "down")] * 3
    with pytest.raises(FetchFailed):
        Fetcher(["127.0.0.1"], Politeness(delay_ms=1, max_retries=2)).fetch(base + "/flaky")
    assert StubHandler.hits["/flaky"] == 2


def test_fetch_recovers_within_retries(stub):
    _, base = stub
    StubHandler.routes["/flaky"] = [(500, "down"), (200, "up")]
    page = Fetcher(["127.0.0.1"], Politeness(delay_ms=1, max_retries=3)).fetch(base + "/flaky")
    assert page.body == "up" and StubHandler.hits["/flaky"] == 2


def test_client_errors_are_returned_not_retried(stub):
    _, base = stub
    page = Fetcher(["127.0.0.1"], Politeness(delay_ms=0, max_retries=3)).fetch(base + "/gone")
    assert page.status == 404 and StubHandler.hits["/gone"] == 1


class RecordingOpener:
    """Answers every request with 200 and notes the clock time it arrived."""

    def __init__(self, clock):
        self.clock, self.times = clock, []

    def open(self, req, timeout=None):
        self.times.append(self.clock())
        import io
        import email.message
        resp = io.BytesIO(b"<p>x</p>")
        resp.status, resp.headers = 200, email.message.Message()
        return resp


def test_politeness_spacing():
    now = [0.0]

    def sleep(s):
        now[0] += s

    opener = RecordingOpener(lambda: now[0])
    fetcher = Fetcher(["h.test"], Politeness(delay_ms=250), clock=lambda: now[0], sleep=sleep, opener=opener)
    for k in range(5):
        fetcher.fetch(f"http://h.test/{k}")
        now[0] += 0.1 * k  # irregular work between requests
    gaps = [b - a for a, b in zip(opener.times, opener.times[1:])]
    assert len(gaps) == 4 and all(g >= 0.25 - 1e-12 for g in gaps)


def test_politeness_spacing_real_server(stub):
    _, base = stub
    StubHandler.routes.update({f"/{k}": [(200, "ok")] for k in range(3)})
    times = []
    fetcher = Fetcher(["127.0.0.1"], Politeness(delay_ms=100))
    real_open = fetcher.opener.open

    def recording_open(req, timeout=None):
        times.append(fetcher.clock())
        return real_open(req, timeout=timeout)

    fetcher.opener.open = recording_open
    for k in range(3):
        fetcher.fetch(f"{base}/{k}")
    assert all(b - a >= 0.1 for a, b in zip(times, times[1:]))


def test_extract_golden_page(fixtures, rules):
    url = "http://noticias.example.mo/zh/2024/economia.html"
    body = (fixtures / "site/zh/2024/economia.html").read_text(encoding="utf-8")
    doc = extract_document(RawPage(url, "t", 200, body), rules)
    assert doc == Document(
        id=document_id(url, "zh"), lang="zh", title="澳門經濟穩定增長",
        paragraphs=("澳門經濟今年穩定增長。政府發布新的統計數據。", "旅客人數明顯上升，酒店入住率也很高。"),
        source_url=url, author="新聞局", date=dt.date(2024, 3, 5),
        switch_url="http://noticias.example.mo/pt/2024/economia.html",
    )


def test_extract_portuguese_date_and_no_switch(fixtures, rules):
    url = "http://noticias.example.mo/pt/2024/vacinas.html"
    body = (fixtures / "site/pt/2024/vacinas.html").read_text(encoding="utf-8")
    doc = extract_document(RawPage(url, "t", 200, body), rules)
    assert doc.date == dt.date(2024, 3, 7) and doc.switch_url is None
    assert doc.paragraphs[1] == "Os postos de vacinação também abrem ao fim de semana."
    assert len(doc.paragraphs) == 2  # the share box is dropped


def test_extract_minimal_and_markup_free():
    rules = SiteRules("t", ["h"], content="div.body", lang_from_url={"pt": "/"})
    html = ("<div class='body'><p>a<script>var x = '<b>';</script> b</p><style>p{}</style>"
            "<p>c &lt;tag&gt;</p><!-- <p>hidden</p> --></div>")
    doc = extract_document(RawPage("http://h/x", "t", 200, html), rules)
    assert doc.paragraphs == ("a b", "c tag")
    single = extract_document(RawPage("http://h/y", "t", 200, "<div class='body'>um</div>"), rules)
    assert single.paragraphs == ("um",)


@given(st.lists(st.text(alphabet="ab<>/&; 澳\n", max_size=12), min_size=1, max_size=5))
def test_paragraphs_never_contain_markup(parts):
    rules = SiteRules("t", ["h"], content="div.body", lang_from_url={"pt": "/"})
    html = "<div class='body'>" + "".join(f"<p>{p}</p><script>{p}</script>" for p in parts) + "</div>"
    try:
        doc = extract_document(RawPage("http://h/x", "t", 200, html), rules)
    except ExtractionFailed:
        return
    assert all("<" not in p and ">" not in p for p in doc.paragraphs)


def test_extract_failures(rules):
    with pytest.raises(ExtractionFailed):
        extract_document(RawPage("http://noticias.example.mo/zh/x", "t", 200, "<p>no body</p>"), rules)
    with pytest.raises(ExtractionFailed):
        extract_document(RawPage("http://noticias.example.mo/zh/x", "t", 404, ""), rules)


def test_bad_date_is_stored_as_absent(rules):
    html = "<span class='date'>ontem</span><div class='article-body'><p>x</p></div>"
    doc = extract_document(RawPage("http://noticias.example.mo/pt/2024/x", "t", 200, html), rules)
    assert doc.date is None


@pytest.mark.parametrize("text,expected", [
    ("2024-03-05", dt.date(2024, 3, 5)),
    ("2024年3月5日", dt.date(2024, 3, 5)),
    ("7 de março de 2024", dt.date(2024, 3, 7)),
    ("7 de Março de 2024", dt.date(2024, 3, 7)),
])
def test_parse_date(text, expected):
    assert parse_date(text, ["%Y-%m-%d", "%Y年%m月%d日", "%d de %m de %Y"]) == expected


def test_parse_date_rejects_garbage():
    with pytest.raises(BadDate):
        parse_date("amanhã", ["%Y-%m-%d"])


def test_switch_url_resolution():
    rules = SiteRules("t", ["h"], switch_link="a.sw")
    page = RawPage("https://h/zh/a/b.html", "t", 200, '<a class="sw" href="../pt/123.html">pt</a>')
    assert extract_switch_url(page, rules) == "https://h/zh/pt/123.html"
    assert extract_switch_url(RawPage("https://h/zh/a/b.html", "t", 200, "<a href='x'>x</a>"), rules) is None


@given(st.sampled_from(["HTTP://H.test:80/a/", "http://h.test/a#frag", "https://h.test:443/", "http://h.test:8080/x?q=1"]))
def test_normalize_url_idempotent(url):
    once = normalize_url(url)
    assert normalize_url(once) == once


def test_store_round_trip(tmp_path):
    path = tmp_path / "docs.jsonl"
    docs = [Document.create(f"http://h/pt/{k}", "pt", f"t{k}", [f"p{k}"], date=dt.date(2024, 1, k + 1))
            for k in range(3)]
    assert store_documents(docs, path) == 3
    assert load_documents(path) == docs
    newer = docs[1].with_(title="revised")
    store_documents([newer], path)
    loaded = load_documents(path)
    assert len(loaded) == 3 and [d for d in loaded if d.id == newer.id][0].title == "revised"
    assert load_documents(path, lang="zh") == []
    assert sorted(d.date.day for d in load_documents(path, date_from=dt.date(2024, 1, 2))) == [2, 3]
    assert {d.date.day for d in load_documents(path, date_from=dt.date(2024, 1, 2), date_to=dt.date(2024, 1, 2))} == {2}


def test_store_corrupt_line(tmp_path):
    path = tmp_path / "docs.jsonl"
    docs = [Document.create(f"http://h/pt/{k}", "pt", "", ["p"]) for k in range(9)]
    store_documents(docs[:4], path)
    with open(path, "a", encoding="utf-8") as f:
        f.write('{"id": "broken\n')
    store_documents(docs[4:], path)
    errors = []
    assert len(load_documents(path, errors=errors)) == 9
    assert len(errors) == 1 and errors[0].lineno == 5


def test_frontier_checkpoint(tmp_path):
    f = Frontier(tmp_path / "frontier.tsv")
    assert f.add("http://h/a") and not f.add("http://h/a")
    f.add("http://h/b")
    f.mark("http://h/a", "done")
    f.save()
    again = Frontier(tmp_path / "frontier.tsv")
    assert again.pending() == ["http://h/b"] and again.state["http://h/a"] == "done"


def test_crawl_snapshot(rules, tmp_path):
    pages = crawl(rules, frontier=Frontier(tmp_path / "f.tsv"))
    statuses = sorted(p.status for p in pages)
    assert statuses.count(200) == 10 and statuses.count(404) == 1
    assert all(p.fetched_at == "snapshot" for p in pages)
    store_pages(pages, tmp_path / "pages.jsonl")
    assert load_pages(tmp_path / "pages.jsonl") == pages


def test_crawl_stays_on_allowed_hosts(tmp_path):
    site = tmp_path / "site"
    site.mkdir()
    (site / "index.html").write_text("<a href='http://elsewhere.test/x'>x</a><a href='/ok'>ok</a>", encoding="utf-8")
    (site / "ok").write_text("fine", encoding="utf-8")
    rules = SiteRules("t", ["h.test"], seeds=["http://h.test/"], mirror=str(site),
                      politeness=Politeness(delay_ms=0))
    assert [p.url for p in crawl(rules)] == ["http://h.test/", "http://h.test/ok"]
