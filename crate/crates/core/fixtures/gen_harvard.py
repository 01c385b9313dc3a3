#!/usr/bin/env python3
"""Regenerate the Harvard and UCM fixture bundles.

harvard_printed.{json,csv}
    Transcription of the printed core-level rows only: the contour, the two
    top-25 columns, blogs.law.harvard.edu and the hbs.harvard.edu / hbs.edu
    pair. Units printed in one column have no measurement for the other, so
    analysing this bundle needs --allow-partial.

harvard.{json,csv}
    A complete 187-unit stand-in. Printed rows keep their printed values;
    every other number, and every unitNNN.harvard.edu filler, is SYNTHETIC.
    Fillers stay below the 25th printed value of each column and are chosen
    so the internal sums equal the printed totals (7,467,107 count pages and
    36,183,780 URL mentions). Satellite contours are printed values;
    satellite internal units are synthetic splits of the printed sums.

ucm_units.json
    Registry of the Complutense internal-unit examples, as printed.

Query ids: first 16 hex digits of SHA-256 over
"{indicator}\\x1f{target_key}\\x1f{exclusion}".

Usage: python3 gen_harvard.py  (writes next to this file, deterministic)
"""

import csv
import hashlib
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
CONTOUR = "harvard.edu"

# (url, entity, kind, mission, count page or None, url mentions or None)
PRINTED = [
    ("mcz.harvard.edu", "Museum of Comparative Zoology", "institution", "services", 1_920_000, None),
    ("seas.harvard.edu", "School of Engineering and Applied Sciences", "institution", "administration", 663_000, None),
    ("lib.harvard.edu", "Harvard Library", "institution", "services", 589_000, 874_000),
    ("coursecatalog.harvard.edu", "Course catalog", "product", "teaching", 555_000, None),
    ("map.harvard.edu", "Campus map", "product", "services", 460_000, None),
    ("fas.harvard.edu", "Faculty of Arts and Sciences", "institution", "administration", 371_000, 3_270_000),
    ("catalyst.harvard.edu", "Harvard Catalyst", "institution", "research", 325_000, 490_000),
    ("chem.harvard.edu", "Department of Chemistry and Chemical Biology", "institution", "teaching", 236_000, None),
    ("abcd.harvard.edu", "Administrative computing", "product", "services", 209_000, None),
    ("law.harvard.edu", "Harvard Law School", "institution", "administration", 181_000, 4_750_000),
    ("mcb.harvard.edu", "Molecular and Cellular Biology", "institution", "teaching", 170_000, 531_000),
    ("hunap.harvard.edu", "Harvard University Native American Program", "institution", "services", 148_000, None),
    ("oeb.harvard.edu", "Organismic and Evolutionary Biology", "institution", "teaching", 94_300, 540_000),
    ("dce.harvard.edu", "Division of Continuing Education", "institution", "transfer", 93_900, None),
    ("cfa.harvard.edu", "Center for Astrophysics", "institution", "research", 88_900, 1_130_000),
    ("mgh.harvard.edu", "Massachusetts General Hospital", "institution", "services", 86_300, 834_000),
    ("huh.harvard.edu", "Harvard University Herbaria", "institution", "services", 86_000, 914_000),
    ("eecs.harvard.edu", "Electrical Engineering and Computer Science", "institution", "administration", 80_400, 455_000),
    ("hup.harvard.edu", "Harvard University Press", "institution", "services", 71_400, None),
    ("hks.harvard.edu", "Harvard Kennedy School", "institution", "administration", 66_600, 775_000),
    ("hms.harvard.edu", "Harvard Medical School", "institution", "administration", 65_200, 1_070_000),
    ("news.harvard.edu", "Public Affairs and Communications", "institution", "services", 56_700, 644_000),
    ("chs.harvard.edu", "Center for Hellenic Studies", "institution", "teaching", 52_500, 350_000),
    ("hcs.harvard.edu", "Harvard Computer Society", "institution", "services", 50_400, 2_470_000),
    ("dfci.harvard.edu", "Dana-Farber Cancer Institute", "institution", "research", 47_500, 539_000),
    ("hsph.harvard.edu", "School of Public Health", "institution", "administration", None, 1_260_000),
    ("bidmc.harvard.edu", "Beth Israel Deaconess Medical Center", "institution", "research", None, 844_000),
    ("hcl.harvard.edu", "Harvard College Library", "institution", "services", None, 714_000),
    ("post.harvard.edu", "Alumni Association", "institution", "services", None, 534_000),
    ("as.harvard.edu", "Atmospheric Sciences", "institution", "research", None, 518_000),
    ("chandra.harvard.edu", "Chandra X-ray Observatory", "institution", "research", None, 454_000),
    ("gov.harvard.edu", "Department of Government", "institution", "teaching", None, 447_000),
    ("biology.harvard.edu", "Department of Biology", "institution", "teaching", None, 425_000),
    ("economics.harvard.edu", "Department of Economics", "institution", "teaching", None, 342_000),
]

CONTOUR_COUNTS = (7_615_804, 38_470_780)
HBS = ("hbs.harvard.edu", 3, 161_000)
HBS_EDU = ("hbs.edu", 75_800, 468_000)
BLOGS_LAW = ("blogs.law.harvard.edu", 72_900, 1_980_000)

INTERNAL_SUM = (7_467_107, 36_183_780)
# Largest printed value that a non-printed unit must stay below.
CAP = (47_500, 342_000)
MISSIONS = {"transfer": 10, "teaching": 28, "administration": 28, "research": 60, "services": 61}

# (name, platform, contour urls with (count, mentions), internal unit count, internal sums)
SATELLITES = [
    ("Academia", "academia.edu", [("harvard.academia.edu", 21_000, 116_000)], 378, (517, 81)),
    ("Facebook", "facebook.com", [("facebook.com/Harvard", 5_580, 9_560)], 56, (26_840, 12_656)),
    ("Flickr", "flickr.com", [("flickr.com/groups/harvard", 951, 10)], 15, (7_209, 511)),
    ("Twitter", "twitter.com", [("twitter.com/Harvard", 8_240, 7_690)], 110, (155_996, 30_991)),
    (
        "YouTube",
        "youtube.com",
        [("youtube.com/harvard", 0, 5_670), ("youtube.com/user/harvard", 1, 15_300)],
        18,
        (20, 15_886),
    ),
]


def query_id(indicator, target, exclusion):
    key = f"{indicator}\x1furl:{target}\x1f{exclusion or ''}"
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def count_page(target):
    return (query_id("count_page", target, None), f"site:{target}")


def url_mention(target, exclusion):
    return (query_id("url_mention", target, exclusion), f'"{target}" -site:{exclusion}')


def split(rng, total, n, cap):
    """n non-negative integers summing to total, heavy-tailed; element i
    stays below cap[i] (or below cap when it is a number)."""
    caps = cap if isinstance(cap, list) else [cap] * n
    assert total <= sum(c - 1 for c in caps), (total, n)
    weights = [rng.paretovariate(1.2) for _ in range(n)]
    scale = total / sum(weights)
    parts = [min(int(w * scale), c - 1) for w, c in zip(weights, caps)]
    i = 0
    while sum(parts) < total:
        if parts[i % n] < caps[i % n] - 1:
            parts[i % n] += 1
        i += 1
    return parts


def unit(url, entity, kind, mission, **extra):
    doc = {"url": url, "entity_name": entity, "kind": kind, "mission": mission}
    doc.update(extra)
    return doc


class Bundle:
    def __init__(self):
        self.rows = []
        self.seen = set()

    def put(self, query, count):
        if count is None or query[0] in self.seen:
            return
        self.seen.add(query[0])
        self.rows.append((query[0], query[1], count))

    def measure(self, target, exclusion, count, mentions):
        self.put(count_page(target), count)
        self.put(url_mention(target, exclusion), mentions)

    def write(self, path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            out = csv.writer(f, lineterminator="\n")
            out.writerow(["query_id", "rendered_query", "count"])
            out.writerows(self.rows)


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def printed():
    units = [unit(u, e, k, m) for (u, e, k, m, _, _) in PRINTED]
    units.append(unit(BLOGS_LAW[0], "Harvard Law School blogs", "product", "unassigned"))
    units.append(unit(HBS[0], "Harvard Business School", "institution", "administration", redirect_target="hbs.edu"))
    units.append(unit(HBS_EDU[0], "Harvard Business School", "institution", "administration", external_alias=True))
    registry = {"name": "Harvard University", "contour_url": CONTOUR, "internal_units": units}

    bundle = Bundle()
    bundle.measure(CONTOUR, CONTOUR, *CONTOUR_COUNTS)
    for (u, _, _, _, count, mentions) in PRINTED:
        bundle.measure(u, CONTOUR, count, mentions)
    for (u, count, mentions) in (BLOGS_LAW, HBS, HBS_EDU):
        bundle.measure(u, CONTOUR, count, mentions)
    write_json(HERE / "harvard_printed.json", registry)
    bundle.write(HERE / "harvard_printed.csv")


def harvard():
    rng = random.Random(20120501)
    bundle = Bundle()
    bundle.measure(CONTOUR, CONTOUR, *CONTOUR_COUNTS)

    units = []
    measured = []  # (url, count, mentions) of every counted core URL
    for (u, e, k, m, count, mentions) in PRINTED:
        extra = {}
        if u == "post.harvard.edu":
            extra = {"aliases": ["alumni.harvard.edu"], "redirect_target": "alumni.harvard.edu"}
        units.append(unit(u, e, k, m, **extra))
        measured.append([u, count, mentions])
    # alias URLs get small fixed values so merged units keep their printed rank
    measured.append(["alumni.harvard.edu", 1_200, 4_100])
    units.append(unit("iq.harvard.edu", "Institute for Quantitative Social Science", "institution", "research",
                      aliases=["cbrss.harvard.edu"]))
    measured += [["iq.harvard.edu", None, None], ["cbrss.harvard.edu", 2_400, 9_800]]
    units.append(unit("meei.harvard.edu", "Massachusetts Eye and Ear Infirmary", "institution", "services",
                      redirect_target="masseyeandear.org"))
    measured.append(["meei.harvard.edu", None, None])
    units.append(unit(HBS[0], "Harvard Business School", "institution", "administration", redirect_target="hbs.edu"))
    measured.append(list(HBS))

    have = {}
    for doc in units:
        have[doc["mission"]] = have.get(doc["mission"], 0) + 1
    fillers = []
    for mission, target in MISSIONS.items():
        fillers += [mission] * (target - have.get(mission, 0))
    rng.shuffle(fillers)
    for i, mission in enumerate(fillers, start=1):
        url = f"unit{i:03}.harvard.edu"
        units.append(unit(url, f"Synthetic unit {i:03}", "institution", mission))
        measured.append([url, None, None])
    assert len(units) == 187, len(units)

    for col in (1, 2):
        open_rows = [r for r in measured if r[col] is None]
        budget = INTERNAL_SUM[col - 1] - sum(r[col] for r in measured if r[col] is not None)
        alias_value = {"post.harvard.edu": "alumni.harvard.edu", "iq.harvard.edu": "cbrss.harvard.edu"}
        fixed = {r[0]: r[col] for r in measured}
        caps = [CAP[col - 1] - fixed.get(alias_value.get(r[0]), 0) for r in open_rows]
        for row, value in zip(open_rows, split(rng, budget, len(open_rows), caps)):
            row[col] = value
    for (u, count, mentions) in measured:
        bundle.measure(u, CONTOUR, count, mentions)

    units.append(unit(HBS_EDU[0], "Harvard Business School", "institution", "administration", external_alias=True))
    bundle.measure(HBS_EDU[0], CONTOUR, HBS_EDU[1], HBS_EDU[2])

    satellites = []
    for (name, platform, contours, n, sums) in SATELLITES:
        for (u, count, mentions) in contours:
            bundle.measure(u, platform, count, mentions)
        sat_units = []
        urls = []
        for i in range(1, n + 1):
            if platform == "academia.edu":
                url = f"harvard.academia.edu/Departments/Synthetic_Department_{i:03}"
                doc = unit(url, f"Synthetic department {i:03}", "institution", "unassigned")
                urls.append(url)
            elif platform == "youtube.com":
                url = f"youtube.com/harvardunit{i:02}"
                alias = f"youtube.com/user/harvardunit{i:02}"
                doc = unit(url, f"Synthetic channel {i:02}", "institution", "unassigned", aliases=[alias])
                urls += [url, alias]
            elif platform == "flickr.com":
                url = f"flickr.com/groups/harvardunit{i:02}"
                doc = unit(url, f"Synthetic group {i:02}", "institution", "unassigned")
                urls.append(url)
            else:
                url = f"{platform}/HarvardUnit{i:03}"
                doc = unit(url, f"Synthetic account {i:03}", "institution", "unassigned")
                urls.append(url)
            sat_units.append(doc)
        counts = split(rng, sums[0], len(urls), sums[0] + 1)
        mentions = split(rng, sums[1], len(urls), sums[1] + 1)
        for url, c, m in zip(urls, counts, mentions):
            bundle.measure(url, platform, c, m)
        sat = {"name": name, "platform_domain": platform, "contour_url": contours[0][0]}
        if len(contours) > 1:
            sat["contour_aliases"] = [c[0] for c in contours[1:]]
        sat["internal_units"] = sat_units
        satellites.append(sat)

    registry = {
        "name": "Harvard University",
        "contour_url": CONTOUR,
        "internal_units": units,
        "satellites": satellites,
    }
    write_json(HERE / "harvard.json", registry)
    bundle.write(HERE / "harvard.csv")


UCM = [
    ("ucm.es/centros/webs/euenfer", "School of Nursing, Physiotherapy and Chiropody", "teaching"),
    ("ucm.es/centros/webs/fbartes", "Faculty of Fine Arts", "teaching"),
    ("mat.ucm.es", "Faculty of Mathematical Sciences", "teaching"),
    ("ucm.es/info/ccquim", "Faculty of Chemical Sciences", "teaching"),
    ("fs-morente.filos.ucm.es", "Faculty of Philosophy", "teaching"),
    ("fdi.ucm.es", "Faculty of Computer Science", "teaching"),
    ("mat.ucm.es/deptos/al", "Department of Algebra", "teaching"),
    ("ucm.es/info/agrygfdp/Web", "Department of Regional Geographical Analysis and Physical Geography", "teaching"),
    ("ucm.es/centros/webs/d529/portal.ucm.es/web/anatomiai", "Department of Anatomy and Human Embryology I", "teaching"),
    ("ucm.es/info/dptoants", "Department of Social Anthropology", "teaching"),
    ("biocel.bio.ucm.es", "Department of Cell Biology 3", "teaching"),
    ("material.fis.ucm.es", "Department of Materials Physics", "teaching"),
    ("forteza.sis.ucm.es/dpto", "Department of Personality, Assessment and Psychological Treatment II", "teaching"),
    ("ucm.es/icae", "Institute of Economic Analysis (ICAE)", "research"),
    ("ucm.es/info/icae", "Institute of Industrial and Financial Analysis", "research"),
    ("ucm.es/BUCM/cee/iaif", "Institute of Biofunctional Studies", "research"),
    ("ieb.ucm.es", "Ramón Castroviejo Ophthalmologic Research Institute", "research"),
    ("ucm.es/info/iiorc", "Interdisciplinary Mathematics Institute (IMI)", "research"),
    ("mat.ucm.es/imi", "Institute of Mediation and Conflict Management", "research"),
    ("ucm.es/centros/webs/iu5022", "Unnamed research institute", "research"),
    ("ucm.es/info/sees", "Giftedness and Talent (ACYT)", "research"),
    ("ucm.es/info/ecocuan/anc/grupo", "Quantitative analysis of economic policy and financial markets", "research"),
    ("artecs.dacya.ucm.es", "Architecture and technology of computing systems", "research"),
    ("mat.ucm.es/wso", "Space astronomy - optimal astronomic resources management", "research"),
    ("ucm.es/info/enviroveg", "Bioclimatology and biogeography", "research"),
    ("mat.ucm.es/~cadedif", "Asymptotic behaviour and dynamics of differential equations", "research"),
    ("ucm.es/centros/webs/gi5080", "Veterinary control of microorganisms", "research"),
    ("maude.sip.ucm.es/fadoss", "Formal analysis and design of software systems (FADOSS)", "research"),
    ("linneo.bio.ucm.es/balaguer/EvoEco", "Plant evolutionary ecology and ecological restoration", "research"),
    ("bbm1.ucm.es/public_html/res/prot", "Proteins", "research"),
    ("ucm.es/info/fisani/sigue", "Reproductive physiology of lagomorphs", "research"),
    ("ucm.es/info/mfar/U4", "Functional genomics of yeast and fungi", "research"),
    ("gass.ucm.es", "Analysis, security and systems (GASS)", "research"),
]


def ucm():
    registry = {
        "name": "Universidad Complutense de Madrid",
        "contour_url": "ucm.es",
        "internal_units": [unit(u, e, "institution", m) for (u, e, m) in UCM],
        "satellites": [
            {
                "name": "Academia",
                "platform_domain": "academia.edu",
                "contour_url": "ucm.academia.edu",
                "internal_units": [
                    unit(
                        "ucm.academia.edu/Departments/Biblioteconomía_y_Documentación",
                        "Department of Librarianship and Information Science",
                        "institution",
                        "teaching",
                    )
                ],
            }
        ],
    }
    write_json(HERE / "ucm_units.json", registry)


if __name__ == "__main__":
    printed()
    harvard()
    ucm()
    write_json(HERE / "published.json", {"coverage_ratio": 0.5466, "pearson_r": 0.19})
