"""The Document record and URL normalization shared by ingest and alignment."""
from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import dataclass, field, replace
from urllib.parse import urljoin, urlsplit, urlunsplit

from .textnorm import Lang

DEFAULT_PORTS = {"http": 80, "https": 443}


def normalize_url(url: str, base: str | None = None) -> str:
    """Absolutize against ``base`` and canonicalize.

    Lowercases scheme and host, drops default ports and fragments, and
    strips a trailing slash from non-root paths.
    """
    if base is not None:
        url = urljoin(base, url)
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    try:
        port = parts.port
    except ValueError:
        port = None
    netloc = host
    if parts.username:
        cred = parts.username + (f":{parts.password}" if parts.password else "")
        netloc = f"{cred}@{host}"
    if port is not None and DEFAULT_PORTS.get(scheme) != port:
        netloc += f":{port}"
    path = parts.path or "/"
    if len(path) > 1:
        path = path.rstrip("/") or "/"
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def url_host(url: str) -> str:
    return (urlsplit(url).hostname or "").lower()


def document_id(url: str, lang) -> str:
    key = f"{normalize_url(url)}\t{Lang.parse(lang).value}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Document:
    id: str
    lang: Lang
    title: str
    paragraphs: tuple
    source_url: str = ""
    author: str | None = None
    date: dt.date | None = None
    switch_url: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lang", Lang.parse(self.lang))
        object.__setattr__(self, "paragraphs", tuple(self.paragraphs))

    @classmethod
    def create(cls, url: str, lang, title: str, paragraphs, **kw) -> "Document":
        return cls(id=document_id(url, lang), lang=lang, title=title,
                   paragraphs=paragraphs, source_url=normalize_url(url), **kw)

    def with_(self, **changes) -> "Document":
        return replace(self, **changes)

    @property
    def text(self) -> str:
        return "\n".join(self.paragraphs)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "lang": self.lang.value,
            "title": self.title,
            "author": self.author,
            "date": self.date.isoformat() if self.date else None,
            "paragraphs": list(self.paragraphs),
            "source_url": self.source_url,
            "switch_url": self.switch_url,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        date = d.get("date")
        return cls(
            id=d["id"],
            lang=d["lang"],
            title=d.get("title", ""),
            author=d.get("author"),
            date=dt.date.fromisoformat(date) if date else None,
            paragraphs=tuple(d["paragraphs"]),
            source_url=d.get("source_url", ""),
            switch_url=d.get("switch_url"),
        )
