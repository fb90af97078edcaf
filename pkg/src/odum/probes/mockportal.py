"""Local portal double serving CKAN, uData, DCAT and generic catalogs.

Run ``python -m odum.probes.mockportal --port 8765`` to browse it by hand.

The catalog holds 100 datasets whose properties follow fixed modular rules,
so sampled tallies can be worked out by hand:

* relevance (views) order is ``ds-000`` .. ``ds-099``
* modified ``(37 * i + 50) % 100`` days before ``MOCK_TODAY``
* no license when ``i % 5 == 3``, no category when ``i % 11 == 4``
* frequency by ``i % 7``: monthly, weekly, annually, irregular, none, monthly, daily
* no tags when ``i % 6 == 5``; PDF instead of CSV when ``i % 4 == 2``
* download is a 404 when ``i % 9 == 8``, an empty file when ``i % 13 == 12``
* default (unsorted) order is ``ds-099`` down to ``ds-000``
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

MOCK_TODAY = dt.date(2024, 2, 20)
N_DATASETS = 100
FREQUENCIES = ["monthly", "weekly", "annually", "irregular", None, "monthly", "daily"]


def days_ago(i: int) -> int:
    return (37 * i + 50) % 100


def _dataset(i: int, base: str) -> dict:
    modified = dt.datetime.combine(MOCK_TODAY - dt.timedelta(days=days_ago(i)), dt.time(8, 0))
    if i % 9 == 8:
        url = f"{base}/download/missing-{i:03d}.csv"
    elif i % 13 == 12:
        url = f"{base}/download/empty.csv"
    else:
        url = f"{base}/download/ds-{i:03d}.csv"
    return {
        "i": i,
        "id": f"ds-{i:03d}",
        "title": f"Dataset {i}",
        "description": f"Synthetic dataset number {i}.",
        "category": None if i % 11 == 4 else "Economy",
        "publisher": "Statistics Office",
        "license": None if i % 5 == 3 else "cc-by-4.0",
        "modified": modified.isoformat(),
        "frequency": FREQUENCIES[i % 7],
        "tags": [] if i % 6 == 5 else ["statistics"],
        "format": "PDF" if i % 4 == 2 else "CSV",
        "url": url,
        "views": 10_000 - 10 * i,
    }


def catalog(base: str) -> list[dict]:
    return [_dataset(i, base) for i in range(N_DATASETS)]


def _order(items: list[dict], sort: str | None) -> list[dict]:
    if sort is None:
        return sorted(items, key=lambda d: -d["i"])
    if sort in ("score desc, metadata_modified desc", "-views"):
        return sorted(items, key=lambda d: -d["views"])
    if sort in ("metadata_modified desc", "-last_modified"):
        return sorted(items, key=lambda d: d["modified"], reverse=True)
    raise KeyError(sort)


def as_ckan(d: dict) -> dict:
    extras = [{"key": "frequency", "value": d["frequency"]}] if d["frequency"] else []
    return {
        "id": d["id"],
        "name": d["id"],
        "title": d["title"],
        "notes": d["description"],
        "groups": [{"name": d["category"].lower(), "title": d["category"]}] if d["category"] else [],
        "organization": {"name": "stats", "title": d["publisher"]},
        "license_id": d["license"] or "",
        "metadata_modified": d["modified"],
        "extras": extras,
        "tags": [{"name": t} for t in d["tags"]],
        "resources": [{"format": d["format"], "url": d["url"]}],
    }


def as_udata(d: dict) -> dict:
    return {
        "id": d["id"],
        "title": d["title"],
        "description": d["description"],
        "category": d["category"],
        "organization": {"name": d["publisher"]},
        "license": d["license"] or "notspecified",
        "last_modified": d["modified"],
        "frequency": d["frequency"] or "unknown",
        "tags": d["tags"],
        "resources": [{"format": d["format"].lower(), "url": d["url"]}],
    }


def as_dcat(d: dict) -> dict:
    node = {
        "@id": f"urn:mock:{d['id']}",
        "@type": "dcat:Dataset",
        "dct:identifier": d["id"],
        "dct:title": d["title"],
        "dct:description": d["description"],
        "dct:publisher": {"foaf:name": d["publisher"]},
        "dct:modified": d["modified"],
        "dcat:keyword": d["tags"],
        "dcat:distribution": [{"@type": "dcat:Distribution", "dct:format": d["format"], "dcat:downloadURL": d["url"]}],
    }
    if d["category"]:
        node["dcat:theme"] = d["category"]
    if d["license"]:
        node["dct:license"] = d["license"]
    if d["frequency"]:
        node["dct:accrualPeriodicity"] = d["frequency"]
    return node


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    def _send(self, status: int, body: bytes = b"", ctype: str = "text/html; charset=utf-8", headers=None):
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD" and body:
            self.wfile.write(body)

    def _json(self, doc, status: int = 200):
        self._send(status, json.dumps(doc).encode("utf-8"), "application/json")

    def do_HEAD(self):
        self._dispatch()

    def do_GET(self):
        self._dispatch()

    def do_POST(self):
        self._dispatch()

    def _dispatch(self):
        start = time.monotonic()
        entry = {"method": self.command, "path": self.path, "start": start, "end": None}
        with self.server.lock:
            self.server.request_log.append(entry)
        try:
            self._route()
        finally:
            entry["end"] = time.monotonic()

    def _route(self):
        parts = urlsplit(self.path)
        path, query = parts.path, {k: v[-1] for k, v in parse_qs(parts.query).items()}
        base = self.server.base_url
        m = re.fullmatch(r"/delay/([0-9.]+)", path)
        if m:
            time.sleep(float(m.group(1)))
            return self._send(200, b"<html><body>" + b"x" * 2048 + b"</body></html>")
        m = re.fullmatch(r"/redirect/(\d+)", path)
        if m:
            n = int(m.group(1))
            return self._send(302, headers={"Location": f"/redirect/{n - 1}" if n > 1 else "/"})
        m = re.fullmatch(r"/status/(\d+)", path)
        if m:
            return self._send(int(m.group(1)), b"status page")
        if path == "/":
            return self._send(200, b"<html><body>mock portal</body></html>")
        if path == "/slow":
            time.sleep(0.3)
            return self._send(200, b"slow")
        if path == "/api":
            return self._json({"datasets": N_DATASETS})
        if path == "/sparql":
            return self._json({"head": {"vars": ["s"]}, "results": {"bindings": [{"s": {"value": "x"}}]}})
        if path == "/sparql-empty":
            return self._send(200, b"", "application/sparql-results+json")
        if path == "/download/empty.csv":
            return self._send(200, b"", "text/csv")
        m = re.fullmatch(r"/download/(ds-\d{3})\.csv", path)
        if m:
            return self._send(200, f"id,value\n{m.group(1)},1\n".encode(), "text/csv")
        if path == "/checker" and self.command == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            payload = json.loads(self.rfile.read(length) or b"{}")
            if self.server.checker_score is None:
                return self._json({"error": "no score"}, 503)
            return self._json({"url": payload.get("url"), "score": self.server.checker_score})
        if path == "/checker-broken" and self.command == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            self.rfile.read(length)
            return self._json({"verdict": "fine"})

        items = catalog(base)
        m = re.fullmatch(r"(/nosort)?/ckan/api/3/action/package_search", path)
        if m:
            sort = query.get("sort")
            if m.group(1) and sort:
                return self._json({"success": False, "error": {"sort": "sorting not supported"}}, 409)
            try:
                ordered = _order(items, sort)
            except KeyError:
                return self._json({"success": False, "error": {"sort": f"bad sort {sort}"}}, 409)
            start, rows = int(query.get("start", 0)), int(query.get("rows", 10))
            window = ordered[start : start + rows]
            return self._json({"success": True, "result": {"count": len(items), "results": [as_ckan(d) for d in window]}})
        if path == "/udata/api/1/datasets/":
            try:
                ordered = _order(items, query.get("sort"))
            except KeyError:
                return self._json({"message": "bad sort"}, 400)
            page, size = int(query.get("page", 1)), int(query.get("page_size", 20))
            window = ordered[(page - 1) * size : page * size]
            return self._json({"data": [as_udata(d) for d in window], "total": len(items), "page": page, "page_size": size})
        if path == "/dcat/catalog.jsonld":
            doc = {
                "@context": {"dcat": "http://www.w3.org/ns/dcat#", "dct": "http://purl.org/dc/terms/"},
                "@graph": [{"@type": "dcat:Catalog", "dcat:dataset": [as_dcat(d) for d in _order(items, None)[:20]]}],
            }
            return self._send(200, json.dumps(doc).encode(), "application/ld+json")
        if path == "/generic/datasets.json":
            docs = []
            for d in _order(items, None)[:10]:
                docs.append(
                    {
                        "identifier": d["id"],
                        "title": d["title"],
                        "description": d["description"],
                        "category": d["category"],
                        "publisher": d["publisher"],
                        "license": d["license"],
                        "modification_date": d["modified"][:10],
                        "update_frequency": d["frequency"],
                        "formats": [d["format"]],
                        "tags": d["tags"],
                        "download_urls": [d["url"]],
                    }
                )
            return self._json(docs)
        return self._send(404, b"not found")


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr):
        super().__init__(addr, _Handler)
        self.lock = threading.Lock()
        self.request_log: list[dict] = []
        self.checker_score: float | None = 75.0
        host, port = self.server_address[:2]
        self.base_url = f"http://{host}:{port}"


class MockPortal:
    """Background mock server; use as a context manager."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._server = _Server((host, port))
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        return self._server.base_url

    @property
    def request_log(self) -> list[dict]:
        return self._server.request_log

    @property
    def checker_score(self):
        return self._server.checker_score

    @checker_score.setter
    def checker_score(self, value):
        self._server.checker_score = value

    def start(self) -> "MockPortal":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description="Serve the mock OGD portal")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args(argv)
    portal = MockPortal(args.host, args.port)
    print(f"mock portal on {portal.url}")
    try:
        portal._server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
