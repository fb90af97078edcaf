"""Catalog adapters that resolve sample positions into dataset metadata."""

from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

from ..sampling import SampleIndexSet, SortCapabilities, SortKey, UpdateFrequency, select_sample
from .http import ProbeClient, ProbeError

log = logging.getLogger(__name__)

FLAVORS = ("ckan", "udata", "dcat_feed", "generic")


class HarvestError(Exception):
    pass


@dataclass
class DatasetMetadata:
    identifier: str
    title: str | None = None
    description: str | None = None
    category: str | None = None
    publisher: str | None = None
    license: str | None = None
    modification_date: dt.date | None = None
    update_frequency: UpdateFrequency = UpdateFrequency.UNSPECIFIED
    formats: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    download_urls: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "identifier": self.identifier,
            "title": self.title,
            "description": self.description,
            "category": self.category,
            "publisher": self.publisher,
            "license": self.license,
            "modification_date": self.modification_date.isoformat() if self.modification_date else None,
            "update_frequency": self.update_frequency.value,
            "formats": list(self.formats),
            "tags": list(self.tags),
            "download_urls": list(self.download_urls),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetMetadata":
        return cls(
            identifier=str(doc["identifier"]),
            title=doc.get("title"),
            description=doc.get("description"),
            category=doc.get("category"),
            publisher=doc.get("publisher"),
            license=doc.get("license"),
            modification_date=parse_date(doc.get("modification_date")),
            update_frequency=UpdateFrequency.parse(doc.get("update_frequency")),
            formats=list(doc.get("formats") or []),
            tags=list(doc.get("tags") or []),
            download_urls=list(doc.get("download_urls") or []),
        )


@dataclass(frozen=True)
class CatalogEndpoint:
    base_url: str
    flavor: str = "ckan"
    auth: str | None = None

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown catalog flavor {self.flavor!r}")


@dataclass
class HarvestResult:
    datasets: list[DatasetMetadata]
    capabilities: SortCapabilities
    catalog_size: int
    sample: SampleIndexSet | None = None
    unsupported_sort_keys: list[SortKey] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def parse_date(value) -> dt.date | None:
    if not value:
        return None
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    text = str(value).strip()
    try:
        return dt.datetime.fromisoformat(text.replace("Z", "+00:00")).date()
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(text[:10])
    except ValueError:
        log.warning("unparseable date %r", value)
        return None


def _text(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, dict):
        for key in ("title", "name", "display_name", "@value", "foaf:name", "@id"):
            if value.get(key):
                return str(value[key])
        return None
    if isinstance(value, list):
        return _text(value[0]) if value else None
    value = str(value).strip()
    return value or None


def _blank(value) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


# --- adapters ----------------------------------------------------------------


class _Adapter:
    sort_params: dict[SortKey, object] = {}

    def __init__(self, endpoint: CatalogEndpoint, client: ProbeClient):
        self.endpoint = endpoint
        self.client = client
        self.base = endpoint.base_url.rstrip("/")

    def _json(self, url: str, params: dict | None = None):
        try:
            got = self.client.get(url, params)
        except ProbeError as exc:
            raise HarvestError(f"{url} unreachable ({exc.reason})") from exc
        if not 200 <= got.status < 300:
            raise HarvestError(f"{url} answered {got.status}")
        try:
            return json.loads(got.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise HarvestError(f"{url}: unparseable payload") from exc

    def capabilities(self) -> SortCapabilities:
        return SortCapabilities(False, False)

    def size(self) -> int:
        raise NotImplementedError

    def window(self, key: SortKey, start: int, rows: int) -> list[DatasetMetadata]:
        raise NotImplementedError


class CkanAdapter(_Adapter):
    sort_params = {
        SortKey.RELEVANCE: "score desc, metadata_modified desc",
        SortKey.MODIFICATION_DATE: "metadata_modified desc",
    }

    @property
    def search_url(self) -> str:
        return f"{self.base}/api/3/action/package_search"

    def _search(self, key: SortKey | None, start: int, rows: int) -> dict:
        params = {"rows": rows, "start": start}
        if key is not None and key is not SortKey.DEFAULT:
            params["sort"] = self.sort_params[key]
        doc = self._json(self.search_url, params)
        if not isinstance(doc, dict) or not doc.get("success"):
            raise HarvestError(f"{self.search_url}: package_search failed")
        return doc["result"]

    def _supports(self, key: SortKey) -> bool:
        try:
            self._search(key, 0, 0)
        except HarvestError:
            return False
        return True

    def capabilities(self) -> SortCapabilities:
        return SortCapabilities(self._supports(SortKey.RELEVANCE), self._supports(SortKey.MODIFICATION_DATE))

    def size(self) -> int:
        return int(self._search(None, 0, 0)["count"])

    def window(self, key, start, rows):
        return [ckan_to_metadata(p) for p in self._search(key, start, rows)["results"]]


def _extra(package: dict, *names: str):
    for extra in package.get("extras") or []:
        if extra.get("key") in names:
            return extra.get("value")
    for name in names:
        if package.get(name):
            return package[name]
    return None


def ckan_to_metadata(package: dict) -> DatasetMetadata:
    resources = package.get("resources") or []
    groups = package.get("groups") or []
    org = package.get("organization") or {}
    return DatasetMetadata(
        identifier=str(package.get("id") or package.get("name")),
        title=_text(package.get("title")),
        description=_text(package.get("notes")),
        category=_text(groups[0]) if groups else _text(_extra(package, "theme", "category")),
        publisher=_text(org) or _text(package.get("author")),
        license=_text(package.get("license_id")) or _text(package.get("license_title")),
        modification_date=parse_date(package.get("metadata_modified")),
        update_frequency=UpdateFrequency.parse(_extra(package, "frequency", "update_frequency", "accrual_periodicity")),
        formats=[r["format"] for r in resources if not _blank(r.get("format"))],
        tags=[_text(t) for t in package.get("tags") or [] if _text(t)],
        download_urls=[r["url"] for r in resources if not _blank(r.get("url"))],
    )


class UdataAdapter(_Adapter):
    sort_params = {SortKey.RELEVANCE: "-views", SortKey.MODIFICATION_DATE: "-last_modified"}

    @property
    def list_url(self) -> str:
        return f"{self.base}/api/1/datasets/"

    def _page(self, key: SortKey | None, page: int, page_size: int) -> dict:
        params = {"page": page, "page_size": page_size}
        if key is not None and key is not SortKey.DEFAULT:
            params["sort"] = self.sort_params[key]
        doc = self._json(self.list_url, params)
        if not isinstance(doc, dict) or "data" not in doc:
            raise HarvestError(f"{self.list_url}: unexpected listing payload")
        return doc

    def capabilities(self) -> SortCapabilities:
        def ok(key):
            try:
                self._page(key, 1, 1)
            except HarvestError:
                return False
            return True

        return SortCapabilities(ok(SortKey.RELEVANCE), ok(SortKey.MODIFICATION_DATE))

    def size(self) -> int:
        return int(self._page(None, 1, 1)["total"])

    def window(self, key, start, rows):
        # pages of size ``rows`` hold the window in at most two requests
        first = start // rows
        items = []
        for page in (first, first + 1):
            items += self._page(key, page + 1, rows)["data"]
            if len(items) >= (start - first * rows) + rows:
                break
        offset = start - first * rows
        return [udata_to_metadata(d) for d in items[offset : offset + rows]]


def udata_to_metadata(doc: dict) -> DatasetMetadata:
    resources = doc.get("resources") or []
    license_ = doc.get("license")
    category = doc.get("category") or doc.get("topic") or (doc.get("topics") or [None])[0]
    return DatasetMetadata(
        identifier=str(doc.get("id") or doc.get("slug")),
        title=_text(doc.get("title")),
        description=_text(doc.get("description")),
        category=_text(category),
        publisher=_text(doc.get("organization")) or _text(doc.get("owner")),
        license=None if license_ in (None, "", "notspecified") else _text(license_),
        modification_date=parse_date(doc.get("last_modified") or doc.get("last_update")),
        update_frequency=UpdateFrequency.parse(doc.get("frequency")),
        formats=[r["format"] for r in resources if not _blank(r.get("format"))],
        tags=[str(t) for t in doc.get("tags") or [] if not _blank(t)],
        download_urls=[r.get("latest") or r["url"] for r in resources if not _blank(r.get("url"))],
    )


_DCAT_KEYS = {
    "title": ("dct:title", "dcterms:title", "http://purl.org/dc/terms/title", "title"),
    "description": ("dct:description", "dcterms:description", "http://purl.org/dc/terms/description", "description"),
    "identifier": ("dct:identifier", "dcterms:identifier", "http://purl.org/dc/terms/identifier", "identifier", "@id"),
    "theme": ("dcat:theme", "http://www.w3.org/ns/dcat#theme", "theme"),
    "publisher": ("dct:publisher", "dcterms:publisher", "http://purl.org/dc/terms/publisher", "publisher"),
    "license": ("dct:license", "dcterms:license", "http://purl.org/dc/terms/license", "license"),
    "modified": ("dct:modified", "dcterms:modified", "http://purl.org/dc/terms/modified", "modified"),
    "frequency": ("dct:accrualPeriodicity", "dcterms:accrualPeriodicity", "http://purl.org/dc/terms/accrualPeriodicity", "accrualPeriodicity"),
    "keyword": ("dcat:keyword", "http://www.w3.org/ns/dcat#keyword", "keyword"),
    "distribution": ("dcat:distribution", "http://www.w3.org/ns/dcat#distribution", "distribution"),
    "format": ("dct:format", "dcterms:format", "dcat:mediaType", "http://purl.org/dc/terms/format", "format", "mediaType"),
    "download": ("dcat:downloadURL", "dcat:accessURL", "http://www.w3.org/ns/dcat#downloadURL", "downloadURL", "accessURL"),
}

_DATASET_TYPES = ("dcat:Dataset", "http://www.w3.org/ns/dcat#Dataset", "Dataset")


def _pick(node: dict, field_: str):
    for key in _DCAT_KEYS[field_]:
        if key in node:
            return node[key]
    return None


def _as_list(value) -> list:
    if value is None:
        return []
    return value if isinstance(value, list) else [value]


def dcat_to_metadata(node: dict) -> DatasetMetadata:
    dists = [d for d in _as_list(_pick(node, "distribution")) if isinstance(d, dict)]
    license_ = _text(_pick(node, "license")) or next((_text(_pick(d, "license")) for d in dists if _pick(d, "license")), None)
    return DatasetMetadata(
        identifier=str(_text(_pick(node, "identifier"))),
        title=_text(_pick(node, "title")),
        description=_text(_pick(node, "description")),
        category=_text(_pick(node, "theme")),
        publisher=_text(_pick(node, "publisher")),
        license=license_,
        modification_date=parse_date(_text(_pick(node, "modified"))),
        update_frequency=UpdateFrequency.parse(_text(_pick(node, "frequency"))),
        formats=[f for f in (_text(_pick(d, "format")) for d in dists) if f],
        tags=[_text(k) for k in _as_list(_pick(node, "keyword")) if _text(k)],
        download_urls=[u for u in (_text(_pick(d, "download")) for d in dists) if u],
    )


def parse_dcat_document(payload: bytes) -> list[DatasetMetadata]:
    """Datasets from a JSON-LD or RDF/XML DCAT catalog, in document order."""
    text = payload.decode("utf-8").lstrip()
    if text.startswith("<"):
        return _parse_rdfxml(text)
    doc = json.loads(text)
    nodes: list = []

    def walk(obj):
        if isinstance(obj, dict):
            types = _as_list(obj.get("@type"))
            if any(t in _DATASET_TYPES for t in types):
                nodes.append(obj)
                return
            for value in obj.values():
                walk(value)
        elif isinstance(obj, list):
            for item in obj:
                walk(item)

    walk(doc)
    return [dcat_to_metadata(n) for n in nodes]


def _parse_rdfxml(text: str) -> list[DatasetMetadata]:
    import xml.etree.ElementTree as ET

    ns = {
        "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
        "dcat": "http://www.w3.org/ns/dcat#",
        "dct": "http://purl.org/dc/terms/",
        "foaf": "http://xmlns.com/foaf/0.1/",
    }
    root = ET.fromstring(text)
    about = "{%s}about" % ns["rdf"]
    resource = "{%s}resource" % ns["rdf"]

    def val(el):
        if el is None:
            return None
        if el.get(resource):
            return el.get(resource)
        name = el.find(".//foaf:name", ns)
        if name is not None:
            return name.text
        return (el.text or "").strip() or None

    out = []
    for ds in root.iter("{%s}Dataset" % ns["dcat"]):
        dists = ds.findall("dcat:distribution/dcat:Distribution", ns)
        license_ = val(ds.find("dct:license", ns)) or next(
            (val(d.find("dct:license", ns)) for d in dists if d.find("dct:license", ns) is not None), None
        )
        out.append(
            DatasetMetadata(
                identifier=val(ds.find("dct:identifier", ns)) or ds.get(about) or "",
                title=val(ds.find("dct:title", ns)),
                description=val(ds.find("dct:description", ns)),
                category=val(ds.find("dcat:theme", ns)),
                publisher=val(ds.find("dct:publisher", ns)),
                license=license_,
                modification_date=parse_date(val(ds.find("dct:modified", ns))),
                update_frequency=UpdateFrequency.parse(val(ds.find("dct:accrualPeriodicity", ns))),
                formats=[f for f in (val(d.find("dct:format", ns)) or val(d.find("dcat:mediaType", ns)) for d in dists) if f],
                tags=[k.text for k in ds.findall("dcat:keyword", ns) if k.text],
                download_urls=[
                    u for u in (val(d.find("dcat:downloadURL", ns)) or val(d.find("dcat:accessURL", ns)) for d in dists) if u
                ],
            )
        )
    return out


class _WholeDocumentAdapter(_Adapter):
    """Catalogs served as one document in default order, without sorting."""

    _cache: list[DatasetMetadata] | None = None

    def _all(self) -> list[DatasetMetadata]:
        if self._cache is None:
            try:
                got = self.client.get(self.endpoint.base_url)
            except ProbeError as exc:
                raise HarvestError(f"{self.endpoint.base_url} unreachable ({exc.reason})") from exc
            if not 200 <= got.status < 300:
                raise HarvestError(f"{self.endpoint.base_url} answered {got.status}")
            try:
                self._cache = self._parse(got.body)
            except (ValueError, KeyError, TypeError) as exc:
                raise HarvestError(f"{self.endpoint.base_url}: unparseable payload ({exc})") from exc
        return self._cache

    def _parse(self, body: bytes) -> list[DatasetMetadata]:
        raise NotImplementedError

    def size(self) -> int:
        return len(self._all())

    def window(self, key, start, rows):
        return self._all()[start : start + rows]


class DcatAdapter(_WholeDocumentAdapter):
    def _parse(self, body):
        return parse_dcat_document(body)


class GenericAdapter(_WholeDocumentAdapter):
    def _parse(self, body):
        doc = json.loads(body.decode("utf-8"))
        items = doc["datasets"] if isinstance(doc, dict) else doc
        return [DatasetMetadata.from_dict(d) for d in items]


_ADAPTERS = {"ckan": CkanAdapter, "udata": UdataAdapter, "dcat_feed": DcatAdapter, "generic": GenericAdapter}


def adapter_for(endpoint: CatalogEndpoint, client: ProbeClient | None = None) -> _Adapter:
    if client is None:
        client = ProbeClient(token=endpoint.auth)
    return _ADAPTERS[endpoint.flavor](endpoint, client)


def _runs(indices: Iterable[int]) -> list[tuple[int, int]]:
    runs: list[list[int]] = []
    for i in sorted(indices):
        if runs and i == runs[-1][0] + runs[-1][1]:
            runs[-1][1] += 1
        else:
            runs.append([i, 1])
    return [(a, b) for a, b in runs]


def _supported(caps: SortCapabilities, key: SortKey) -> bool:
    if key is SortKey.RELEVANCE:
        return caps.by_relevance
    if key is SortKey.MODIFICATION_DATE:
        return caps.by_modification_date
    return True


def harvest_catalog(
    endpoint: CatalogEndpoint,
    sample: SampleIndexSet,
    client: ProbeClient | None = None,
    capabilities: SortCapabilities | None = None,
) -> HarvestResult:
    """Fetch the sampled positions; datasets appearing under two sorts are kept once.

    Sort keys the catalog cannot honour are skipped and listed in
    ``unsupported_sort_keys`` so the caller can re-derive the sample.
    """
    adapter = adapter_for(endpoint, client)
    caps = capabilities if capabilities is not None else adapter.capabilities()
    size = adapter.size()
    result = HarvestResult([], caps, size, sample)
    if any(i >= size for _, i in sample.entries):
        raise HarvestError(f"sample index out of range for catalog of {size} datasets")
    seen: set[str] = set()
    for key in sample.sort_keys():
        if not _supported(caps, key):
            result.unsupported_sort_keys.append(key)
            continue
        for start, rows in _runs(sample.indices(key)):
            items = adapter.window(key, start, rows)
            if len(items) != rows:
                raise HarvestError(f"{key.value}: expected {rows} datasets at {start}, got {len(items)}")
            for pos, meta in enumerate(items, start=start):
                if meta.identifier in seen:
                    result.flags.append(f"{meta.identifier} appears again at {key.value}:{pos}; kept once")
                    continue
                seen.add(meta.identifier)
                result.datasets.append(meta)
    return result


def harvest_sample(endpoint: CatalogEndpoint, client: ProbeClient | None = None) -> HarvestResult:
    """Detect sort support, derive the sample from it, then harvest."""
    adapter = adapter_for(endpoint, client)
    caps = adapter.capabilities()
    size = adapter.size()
    if size < 1:
        raise HarvestError(f"{endpoint.base_url}: empty catalog")
    sample = select_sample(size, caps)
    return harvest_catalog(endpoint, sample, adapter.client, caps)
