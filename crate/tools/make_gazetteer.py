"""Regenerate crates/core/data/gazetteer.tsv from the geonamescache city table.

Picks hub cities in landslide-prone countries and adds every smaller city
within 40 km of a hub, so that synthetic events have nearby towns that fall
into different grid cells.
"""
import math
import re
import unicodedata

import geonamescache

COUNTRIES = ["IN", "NP", "CO", "BR", "PE", "PH", "ID", "CN", "MM", "GT",
             "US", "IT", "JP", "EC", "MX", "VN", "BD", "KE", "UG", "PK"]
STOP = {"of", "the", "in", "on", "at", "mobile", "reading", "nice", "bath",
        "college", "university", "union", "victoria", "liberty", "independence",
        "progress", "concord", "hope", "orange", "santa", "san", "city"}
TARGET = 1000


def ascii_name(name):
    folded = unicodedata.normalize("NFKD", name).encode("ascii", "ignore").decode()
    if not re.fullmatch(r"[A-Za-z][A-Za-z .'-]*[A-Za-z]", folded):
        return None
    if folded.lower() in STOP:
        return None
    return folded


def km(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * 6371.0088 * math.asin(math.sqrt(h))


def main():
    cities = [c for c in geonamescache.GeonamesCache().get_cities().values()
              if c["countrycode"] in COUNTRIES]
    cities.sort(key=lambda c: (-c["population"], c["geonameid"]))
    seen = set()
    rows = []
    for hub in cities:
        if len(rows) >= TARGET:
            break
        name = ascii_name(hub["name"])
        if not name or name.lower() in seen:
            continue
        hub_pos = (hub["latitude"], hub["longitude"])
        group = [(name, hub_pos)]
        for other in cities:
            other_name = ascii_name(other["name"])
            if not other_name or other_name.lower() in seen or other_name == name:
                continue
            pos = (other["latitude"], other["longitude"])
            if 5.0 < km(hub_pos, pos) <= 40.0:
                group.append((other_name, pos))
        if len(group) < 2:
            continue
        for n, pos in group:
            if n.lower() in seen or len(rows) >= TARGET:
                continue
            seen.add(n.lower())
            rows.append((n, pos))
    with open("crates/core/data/gazetteer.tsv", "w") as fh:
        for n, (lat, lon) in rows:
            fh.write(f"{n}\t{lat:.5f}\t{lon:.5f}\n")
    print(len(rows))


if __name__ == "__main__":
    main()
