"""Deterministic synthetic corpora for pipeline and acceptance tests.

Sources contain only entities from the grounded pools; summaries reuse the
same surfaces and optionally inject entities from a disjoint foreign pool.
Every foreign surface is detectable by the rules backend and never occurs
in any generated source, so a record has extrinsic mentions exactly when
the generator injected some.
"""

from __future__ import annotations

import random

PEOPLE = ["Maria Lopez", "James Carter", "Wei Zhang", "Amina Diallo",
          "Lars Eriksen", "Sofia Rossi", "Priya Nair", "Tomas Novak"]
PLACES = ["Nairobi", "Oslo", "Jakarta", "Lisbon", "Athens", "Toronto",
          "Manila", "Vienna"]
YEARS = ["2011", "2013", "2014", "2017", "2019"]
MONEY = ["$44", "$310", "$1,250", "$9.99"]
PERCENTS = ["12%", "7%", "48%"]

FOREIGN = ["Viktor Malenko", "Rosa Delgado", "Kenji Watanabe", "Ingrid Olsen",
           "Tashkent", "Windhoek", "Suva", "$77", "$8,400", "93%", "1987"]

_PHRASES = [" alongside {}", " with support from {}",
            " despite objections from {}"]


def _summary(lead: str, person: str, place: str, year: str,
             foreign: list[str]) -> str:
    text = f"{person} {lead} in {place} during {year}"
    for j, surface in enumerate(foreign):
        text += _PHRASES[j % len(_PHRASES)].format(surface)
    return text + "."


def make_corpus(n: int, seed: int, hyp_foreign_max: int = 3,
                ref_foreign_max: int = 0):
    """Return (records, meta): corpus dicts plus per-id injected surfaces."""
    rng = random.Random(f"{seed}|synth")
    records = []
    meta = {}
    for i in range(n):
        person = rng.choice(PEOPLE)
        place = rng.choice(PLACES)
        year = rng.choice(YEARS)
        money = rng.choice(MONEY)
        pct = rng.choice(PERCENTS)
        source = (f"{person} visited {place} in {year} and signed a deal "
                  f"worth {money}. Officials said exports rose by {pct} "
                  f"as the venture expanded.")
        hyp_foreign = rng.sample(FOREIGN, rng.randint(0, hyp_foreign_max))
        ref_foreign = rng.sample(FOREIGN, rng.randint(0, ref_foreign_max)) \
            if ref_foreign_max else []
        rid = f"r{i:05d}"
        records.append({
            "id": rid,
            "source": source,
            "reference": _summary("met partners", person, place, year, ref_foreign),
            "hypothesis": _summary("met regional partners", person, place, year,
                                   hyp_foreign),
        })
        meta[rid] = {"hyp_foreign": hyp_foreign, "ref_foreign": ref_foreign}
    return records, meta
