"""Crawling, article extraction and the JSONL document store.

Site-specific knowledge (allowed hosts, CSS selectors, date formats, which
URLs are articles) lives in :class:`SiteRules`, loaded from one YAML or
JSON file per site.
"""
from __future__ import annotations

import datetime as dt
import email.message
import io
import json
import logging
import re
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from bs4 import BeautifulSoup, NavigableString, Tag

from .document import Document, normalize_url, url_host
from .errors import BadDate, ExtractionFailed, FetchFailed, HostNotAllowed, StoreCorrupt
from .textnorm import Lang

log = logging.getLogger(__name__)

BLOCK_TAGS = frozenset(
    "address article aside blockquote dd div dl dt figcaption figure footer form "
    "h1 h2 h3 h4 h5 h6 header hr li main nav ol p pre section table tbody td th thead tr ul".split()
)
STRIP_TAGS = ("script", "style", "noscript", "template", "iframe", "svg")

PT_MONTHS = {
    "janeiro": 1, "fevereiro": 2, "março": 3, "marco": 3, "abril": 4, "maio": 5, "junho": 6,
    "julho": 7, "agosto": 8, "setembro": 9, "outubro": 10, "novembro": 11, "dezembro": 12,
    "jan": 1, "fev": 2, "mar": 3, "abr": 4, "mai": 5, "jun": 6,
    "jul": 7, "ago": 8, "set": 9, "out": 10, "nov": 11, "dez": 12,
}
ZH_MONTHS = {
    "十二月": 12, "十一月": 11, "十月": 10, "九月": 9, "八月": 8, "七月": 7,
    "六月": 6, "五月": 5, "四月": 4, "三月": 3, "二月": 2, "一月": 1,
}


@dataclass(frozen=True)
class Politeness:
    delay_ms: int = 1000
    max_retries: int = 3
    user_agent: str = "bitextkit/0.1 (+research crawler)"
    timeout: float = 30.0


@dataclass
class SiteRules:
    name: str
    hosts: list
    seeds: list = field(default_factory=list)
    follow: list = field(default_factory=list)  # regexes of URLs worth fetching
    article: list = field(default_factory=list)  # regexes of URLs that are articles
    lang_from_url: dict = field(default_factory=dict)  # lang -> regex
    title: str = "h1"
    author: str | None = None
    date: str | None = None
    content: str = "article"
    switch_link: str | None = None
    drop: list = field(default_factory=list)
    date_formats: list = field(default_factory=lambda: ["%Y-%m-%d"])
    politeness: Politeness = field(default_factory=Politeness)
    max_pages: int = 1000
    mirror: str | None = None  # serve URLs from a saved snapshot directory instead of the network

    @classmethod
    def from_dict(cls, d: dict) -> "SiteRules":
        d = dict(d)
        sel = d.pop("selectors", {}) or {}
        for key in ("title", "author", "date", "content", "switch_link", "drop"):
            if key in sel:
                d[key] = sel[key]
        if "politeness" in d:
            d["politeness"] = Politeness(**d["politeness"])
        d["hosts"] = [h.lower() for h in d.get("hosts", [])]
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SiteRules":
        with open(path, encoding="utf-8") as f:
            d = yaml.safe_load(f)
        if d.get("mirror"):
            d["mirror"] = str(Path(path).parent / d["mirror"])
        return cls.from_dict(d)

    def allows(self, url: str) -> bool:
        return url_host(url) in self.hosts

    def is_article(self, url: str) -> bool:
        return any(re.search(p, url) for p in self.article)

    def should_follow(self, url: str) -> bool:
        return self.allows(url) and (not self.follow or any(re.search(p, url) for p in self.follow))

    def lang_of(self, url: str):
        for lang, pattern in self.lang_from_url.items():
            if re.search(pattern, url):
                return Lang.parse(lang)
        return None


@dataclass(frozen=True)
class RawPage:
    url: str
    fetched_at: str
    status: int
    body: str
    lang_hint: Lang | None = None

    def to_dict(self) -> dict:
        return {"url": self.url, "fetched_at": self.fetched_at, "status": self.status,
                "body": self.body, "lang_hint": self.lang_hint.value if self.lang_hint else None}

    @classmethod
    def from_dict(cls, d: dict) -> "RawPage":
        hint = d.get("lang_hint")
        return cls(d["url"], d["fetched_at"], int(d["status"]), d["body"], Lang.parse(hint) if hint else None)


# --- fetching ---------------------------------------------------------------

def _utc_stamp() -> str:
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()


class Fetcher:
    """HTTP client enforcing a host allow-list, per-host spacing and retries."""

    def __init__(self, allowed_hosts, politeness: Politeness = Politeness(),
                 clock=time.monotonic, sleep=time.sleep, opener=None, stamp=None):
        self.allowed = {h.lower() for h in allowed_hosts}
        self.politeness = politeness
        self.clock = clock
        self.sleep = sleep
        self.opener = opener or urllib.request.build_opener()
        self.stamp = stamp or _utc_stamp
        self._last = {}
        self._locks = {}
        self._guard = threading.Lock()

    def _host_lock(self, host):
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def _wait_turn(self, host):
        gap = self.politeness.delay_ms / 1000.0
        last = self._last.get(host)
        if last is not None:
            remaining = last + gap - self.clock()
            if remaining > 0:
                self.sleep(remaining)
        self._last[host] = self.clock()

    def _request(self, url):
        req = urllib.request.Request(url, headers={"User-Agent": self.politeness.user_agent})
        try:
            with self.opener.open(req, timeout=self.politeness.timeout) as resp:
                charset = resp.headers.get_content_charset() or "utf-8"
                return resp.status, resp.read().decode(charset, errors="replace")
        except urllib.error.HTTPError as exc:
            body = exc.read().decode("utf-8", errors="replace") if exc.fp else ""
            return exc.code, body

    def fetch(self, url: str, lang_hint=None) -> RawPage:
        url = normalize_url(url)
        host = url_host(url)
        if host not in self.allowed:
            raise HostNotAllowed(f"{host} is not in the allow-list")
        attempts = max(1, self.politeness.max_retries)
        backoff = self.politeness.delay_ms / 1000.0
        problem = None
        with self._host_lock(host):
            for attempt in range(attempts):
                if attempt:
                    self.sleep(backoff * 2 ** (attempt - 1))
                self._wait_turn(host)
                try:
                    status, body = self._request(url)
                except (urllib.error.URLError, OSError) as exc:
                    problem = str(exc)
                    continue
                if status >= 500 or status == 429:
                    problem = f"HTTP {status}"
                    continue
                return RawPage(url, self.stamp(), status, body, Lang.parse(lang_hint) if lang_hint else None)
        raise FetchFailed(f"{url}: gave up after {attempts} attempts ({problem})")


class _SnapshotResponse(io.BytesIO):
    status = 200

    def __init__(self, data: bytes):
        super().__init__(data)
        self.headers = email.message.Message()
        self.headers["Content-Type"] = "text/html; charset=utf-8"


class SnapshotOpener:
    """Opener that answers requests from files under ``root``.

    ``/`` and directory paths map to ``index.html``; anything missing is a 404.
    Host and query are ignored, so a snapshot stands in for one site.
    """

    def __init__(self, root):
        self.root = Path(root).resolve()

    def open(self, req, timeout=None):
        url = req.full_url if hasattr(req, "full_url") else str(req)
        rel = urllib.parse.unquote(urllib.parse.urlsplit(url).path).lstrip("/")
        target = (self.root / rel).resolve()
        if target.is_dir():
            target = target / "index.html"
        if self.root not in target.parents or not target.is_file():
            raise urllib.error.HTTPError(url, 404, "not in snapshot", email.message.Message(), None)
        return _SnapshotResponse(target.read_bytes())


def fetch(url: str, politeness: Politeness, allowed_hosts) -> RawPage:
    return Fetcher(allowed_hosts, politeness).fetch(url)


# --- extraction -------------------------------------------------------------

def _soup(html: str) -> BeautifulSoup:
    soup = BeautifulSoup(html, "html.parser")
    for tag in soup.find_all(STRIP_TAGS):
        tag.decompose()
    return soup


def _clean(text: str) -> str:
    text = re.sub(r"\s+", " ", text).strip()
    return text.replace("<", "").replace(">", "") if ("<" in text or ">" in text) else text


def block_paragraphs(node: Tag) -> list[str]:
    """Text of ``node`` split at block-level element boundaries and ``<br>``."""
    out, buf = [], []

    def flush():
        text = _clean("".join(buf))
        if text:
            out.append(text)
        buf.clear()

    def walk(el):
        for child in el.children:
            if isinstance(child, NavigableString):
                if type(child) is NavigableString:  # skip comments, doctype, CDATA
                    buf.append(str(child))
            elif isinstance(child, Tag):
                if child.name == "br":
                    flush()
                elif child.name in BLOCK_TAGS:
                    flush()
                    walk(child)
                    flush()
                else:
                    walk(child)

    walk(node)
    flush()
    return out


def parse_date(text: str, formats) -> dt.date:
    raw = text.strip()
    candidates = [raw]
    lowered = raw.lower()
    swapped = re.sub(r"[a-zç]+", lambda m: str(PT_MONTHS.get(m.group(), m.group())), lowered)
    if swapped != lowered:
        candidates.append(swapped)
    for name, num in ZH_MONTHS.items():
        if name in raw:
            candidates.append(raw.replace(name, f"{num}月"))
            break
    for cand in candidates:
        for fmt in formats:
            try:
                return dt.datetime.strptime(cand, fmt).date()
            except ValueError:
                continue
    raise BadDate(f"unparseable date {raw!r}")


def _detect_lang(page: RawPage, rules: SiteRules, soup: BeautifulSoup):
    lang = rules.lang_of(page.url) or page.lang_hint
    if lang is None:
        html = soup.find("html")
        code = html.get("lang", "") if html else ""
        prefix = code.split("-")[0].lower()
        if prefix in ("zh", "pt", "en"):
            lang = Lang.parse(prefix)
    if lang is None:
        raise ExtractionFailed(f"{page.url}: cannot tell the page language")
    return lang


def extract_switch_url(page: RawPage, rules: SiteRules, soup: BeautifulSoup | None = None):
    if not rules.switch_link:
        return None
    soup = soup or _soup(page.body)
    for a in soup.select(rules.switch_link):
        href = a.get("href")
        if href and not href.startswith(("javascript:", "mailto:", "#")):
            return normalize_url(href, base=page.url)
    return None


def extract_document(page: RawPage, rules: SiteRules) -> Document:
    if page.status != 200:
        raise ExtractionFailed(f"{page.url}: status {page.status}")
    soup = _soup(page.body)
    switch = extract_switch_url(page, rules, soup)
    lang = _detect_lang(page, rules, soup)
    for sel in rules.drop:
        for tag in soup.select(sel):
            tag.decompose()

    def text_of(selector):
        if not selector:
            return None
        el = soup.select_one(selector)
        return _clean(el.get_text(" ")) if el else None

    title = text_of(rules.title)
    if title is None and soup.title:
        title = _clean(soup.title.get_text(" "))
    author = text_of(rules.author) or None
    date = None
    raw_date = text_of(rules.date)
    if raw_date:
        try:
            date = parse_date(raw_date, rules.date_formats)
        except BadDate as exc:
            log.warning("%s: %s; storing without a date", page.url, exc)

    paragraphs = []
    for container in soup.select(rules.content):
        paragraphs.extend(block_paragraphs(container))
    if not paragraphs:
        raise ExtractionFailed(f"{page.url}: no content matched {rules.content!r}")
    return Document.create(page.url, lang, title or "", paragraphs, author=author, date=date, switch_url=switch)


# --- crawling ---------------------------------------------------------------

class Frontier:
    """Crawl state persisted as ``url<TAB>state`` lines (pending, done, failed)."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.state = {}
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    url, _, state = line.rstrip("\n").partition("\t")
                    if url:
                        self.state[url] = state or "pending"

    def add(self, url):
        if url not in self.state:
            self.state[url] = "pending"
            return True
        return False

    def mark(self, url, state):
        self.state[url] = state

    def pending(self):
        return [u for u, s in self.state.items() if s == "pending"]

    def save(self):
        if not self.path:
            return
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for url, state in self.state.items():
                f.write(f"{url}\t{state}\n")
        tmp.replace(self.path)


def page_links(page: RawPage) -> list[str]:
    soup = BeautifulSoup(page.body, "html.parser")
    links = []
    for a in soup.find_all("a", href=True):
        href = a["href"]
        if href.startswith(("javascript:", "mailto:", "#")):
            continue
        links.append(normalize_url(href, base=page.url))
    return links


def crawl(rules: SiteRules, fetcher: Fetcher | None = None, frontier: Frontier | None = None,
          max_pages: int | None = None) -> list[RawPage]:
    """Breadth-first crawl from the seeds, following allowed links; returns fetched pages."""
    if fetcher is None:
        if rules.mirror:
            # replayed pages carry a fixed stamp so snapshot crawls are reproducible
            fetcher = Fetcher(rules.hosts, rules.politeness, opener=SnapshotOpener(rules.mirror),
                              stamp=lambda: "snapshot")
        else:
            fetcher = Fetcher(rules.hosts, rules.politeness)
    frontier = frontier or Frontier()
    limit = max_pages or rules.max_pages
    queue = deque()
    for seed in rules.seeds:
        url = normalize_url(seed)
        frontier.add(url)
    queue.extend(frontier.pending())
    pages, fetched = [], 0
    while queue and fetched < limit:
        url = queue.popleft()
        if frontier.state.get(url) != "pending":
            continue
        try:
            page = fetcher.fetch(url, rules.lang_of(url))
        except (FetchFailed, HostNotAllowed) as exc:
            log.warning("%s", exc)
            frontier.mark(url, "failed")
            continue
        fetched += 1
        frontier.mark(url, "done")
        pages.append(page)
        if page.status == 200:
            for link in page_links(page):
                if rules.should_follow(link) and frontier.add(link):
                    queue.append(link)
        frontier.save()
    frontier.save()
    return pages


# --- stores -----------------------------------------------------------------

def _append_jsonl(records, path) -> int:
    n = 0
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def _read_jsonl(path, errors: list | None):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                err = StoreCorrupt(path, lineno, f"malformed JSON ({exc.msg})")
                log.warning("%s", err)
                if errors is not None:
                    errors.append(err)


def store_documents(docs, path) -> int:
    return _append_jsonl((d.to_dict() for d in docs), path)


def load_documents(path, lang=None, date_from: dt.date | None = None, date_to: dt.date | None = None,
                   errors: list | None = None) -> list[Document]:
    """Documents in ``path``, deduplicated by id (last record wins) and filtered."""
    if not Path(path).exists():
        return []
    by_id = {}
    for lineno, rec in _read_jsonl(path, errors):
        try:
            doc = Document.from_dict(rec)
        except (KeyError, TypeError, ValueError) as exc:
            err = StoreCorrupt(path, lineno, f"bad document record ({exc})")
            log.warning("%s", err)
            if errors is not None:
                errors.append(err)
            continue
        by_id.pop(doc.id, None)
        by_id[doc.id] = doc
    lang = Lang.parse(lang) if lang is not None else None
    out = []
    for doc in by_id.values():
        if lang is not None and doc.lang is not lang:
            continue
        if date_from or date_to:
            if doc.date is None:
                continue
            if date_from and doc.date < date_from:
                continue
            if date_to and doc.date > date_to:
                continue
        out.append(doc)
    return out


def store_pages(pages, path) -> int:
    return _append_jsonl((p.to_dict() for p in pages), path)


def load_pages(path, errors: list | None = None) -> list[RawPage]:
    by_url = {}
    for _, rec in _read_jsonl(path, errors):
        page = RawPage.from_dict(rec)
        by_url.pop(page.url, None)
        by_url[page.url] = page
    return list(by_url.values())
