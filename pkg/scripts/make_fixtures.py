"""Regenerate the bundled fixture corpora under src/odum/data/.

registry/  one empty assessment per portal of the 33-country study
demo/      synthetic assessments with four planted performance groups
"""

import datetime as dt
from pathlib import Path

import numpy as np

from odum.io import dump_record
from odum.schema import DependentAccuracy, ExternalScore, Manual, Sampled, TimedLoad, load_schema
from odum.scoring import AccuracyCount, AssessmentRecord, Boolean, Measured, PortalProfile, SampleCount

DATA = Path(__file__).resolve().parents[1] / "src" / "odum" / "data"

GCC = {"Bahrain", "Kuwait", "Oman", "Qatar", "Saudi Arabia", "United Arab Emirates"}
REGISTRY = [
    ("Austria", "www.data.gv.at"),
    ("Bahrain", "www.data.gov.bh/pages/homepage/"),
    ("Belgium", "data.gov.be/en"),
    ("Bulgaria", "data.egov.bg/"),
    ("Croatia", "data.gov.hr/en"),
    ("Cyprus", "www.data.gov.cy/?language=en"),
    ("Czechia", "data.gov.cz/english/"),
    ("Denmark", "www.opendata.dk/"),
    ("Estonia", "avaandmed.eesti.ee/"),
    ("Finland", "www.avoindata.fi/en"),
    ("France", "data.gouv.fr"),
    ("Germany", "www.govdata.de/"),
    ("Greece", "www.data.gov.gr/"),
    ("Hungary", "kozadatportal.hu/"),
    ("Ireland", "data.gov.ie"),
    ("Italy", "www.dati.gov.it/"),
    ("Kuwait", "e.gov.kw/sites/kgenglish/Pages/OtherTopics/OpenData.aspx"),
    ("Latvia", "data.gov.lv/eng"),
    ("Lithuania", "data.gov.lt/"),
    ("Luxembourg", "data.public.lu/en/"),
    ("Malta", "data.gov.mt/"),
    ("Netherlands", "data.overheid.nl/en"),
    ("Oman", "data.gov.om/"),
    ("Poland", "dane.gov.pl/en"),
    ("Portugal", "dados.gov.pt/en/"),
    ("Qatar", "www.data.gov.qa/pages/home/"),
    ("Romania", "data.gov.ro/"),
    ("Saudi Arabia", "od.data.gov.sa/en"),
    ("Slovakia", "data.gov.sk/en"),
    ("Slovenia", "podatki.gov.si/#"),
    ("Spain", "datos.gob.es/"),
    ("Sweden", "www.dataportal.se/en"),
    ("United Arab Emirates", "bayanat.ae/"),
]


def slug(name):
    return name.lower().replace(" ", "-")


def write_registry():
    out = DATA / "registry"
    for old in out.glob("*.json"):
        old.unlink()
    for country, address in REGISTRY:
        profile = PortalProfile(country, country, "GCC" if country in GCC else "EU", "https://" + address)
        (out / f"{slug(country)}.json").write_text(dump_record(profile, AssessmentRecord(country)), encoding="utf-8")


def observation(spec, passed, rng):
    crit = spec.criterion
    if isinstance(crit, Manual):
        return Boolean(bool(passed))
    if isinstance(crit, Sampled):
        return SampleCount(int(rng.integers(10, 15)) if passed else int(rng.integers(0, 10)), 14)
    if isinstance(crit, DependentAccuracy):
        return AccuracyCount(8, 10) if passed else AccuracyCount(3, 10)
    if isinstance(crit, ExternalScore):
        return Measured(int(rng.integers(61, 96)) if passed else int(rng.integers(30, 61)), "score")
    if isinstance(crit, TimedLoad):
        return Measured(round(float(rng.uniform(1.0, 3.9)), 2) if passed else round(float(rng.uniform(4.0, 9.0)), 2), "s")
    raise TypeError(crit)


def write_demo(n=16, seed=7):
    schema = load_schema()
    rng = np.random.default_rng(seed)
    out = DATA / "demo"
    for old in out.glob("*.json"):
        old.unlink()
    pass_rates = [0.85, 0.6, 0.4, 0.2]
    centers = np.array([rng.random(len(schema)) < p for p in pass_rates])
    groups = np.arange(n) % 4
    regions = ["EU"] * 10 + ["GCC"] * 4 + ["Other"] * 2
    for idx in range(n):
        bits = centers[groups[idx]] ^ (rng.random(len(schema)) < 0.08)
        portal = f"demo-{idx + 1:02d}"
        record = AssessmentRecord(portal, dt.date(2024, 2, 20))
        for spec, bit in zip(schema, bits):
            if idx == 5 and spec.id == "i6":
                continue  # left unobserved on purpose
            record.observations[spec.id] = observation(spec, bit, rng)
            record.provenance[spec.id] = "probe" if spec.id in ("c1", "e1") and idx % 3 == 0 else "manual"
        profile = PortalProfile(portal, f"Demoland {idx + 1:02d}", regions[idx], f"https://demo-{idx + 1:02d}.example.org/")
        (out / f"{portal}.json").write_text(dump_record(profile, record), encoding="utf-8")


if __name__ == "__main__":
    write_registry()
    write_demo()
