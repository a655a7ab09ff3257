"""Rebuild the bundled example CSVs in ``src/predterms/datasets``.

The raw tables are taken from wheels published on PyPI:

* Top Gear cars      -- ``robpy`` (``robpy/datasets/data/topgear.csv``)
* German credit      -- ``responsibly`` (UCI ``german.data``)
* Titanic passengers -- ``explainerdashboard`` (Kaggle training set, one-hot)

Usage::

    python scripts/make_datasets.py [--cache DIR]

Wheels already present in ``--cache`` are reused.
"""

from __future__ import annotations

import argparse
import csv
import io
import urllib.request
import zipfile
from pathlib import Path

WHEELS = {
    "robpy": "https://files.pythonhosted.org/packages/ab/69/"
    "57a23938bfd9b33a8dfbf5ce5b6a97df0a3d18333db77b810c0c1302862f/robpy-0.0.6-py3-none-any.whl",
    "responsibly": "https://files.pythonhosted.org/packages/44/64/"
    "72211de680c21fe6cea67da182db965861603d311c67839ab39cc7226780/responsibly-0.1.2-py3-none-any.whl",
    "explainerdashboard": "https://files.pythonhosted.org/packages/29/4a/"
    "54a736ea7ad4f219e2c2a66567f7f279a7d5673afe5ddfc925aaa16a763c/explainerdashboard-0.5.8-py3-none-any.whl",
}

OUT = Path(__file__).resolve().parents[1] / "src" / "predterms" / "datasets"


def _wheel(name: str, cache: Path) -> zipfile.ZipFile:
    hits = sorted(cache.glob(f"{name}*.whl"))
    if hits:
        return zipfile.ZipFile(hits[0])
    with urllib.request.urlopen(WHEELS[name], timeout=300) as resp:
        payload = resp.read()
    (cache / WHEELS[name].rsplit("/", 1)[1]).write_bytes(payload)
    return zipfile.ZipFile(io.BytesIO(payload))


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _write(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _num(s: str):
    return None if s in ("", "NA") else float(s)


def topgear(cache: Path) -> None:
    z = _wheel("robpy", cache)
    text = z.read("robpy/datasets/data/topgear.csv").decode("utf-8")
    header = ["car", "hp", "topspeed", "length", "displ", "MPG", "GPM", "accel",
              "drive", "weight", "fuel", "torque", "alarm", "navig"]
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        mpg = _num(r["MPG"])
        accel = _num(r["Acceleration"])
        weight = _num(r["Weight"])
        # two recording errors in the source: 0 s to 62 mph, and a 210 kg car
        if accel == 0.0:
            accel = None
        if weight is not None and weight < 400:
            weight = None
        length = _num(r["Length"])
        rows.append([
            f"{r['Make']} {r['Model']}",
            _num(r["BHP"]),
            _num(r["TopSpeed"]),
            None if length is None else length / 1000.0,
            _num(r["Displacement"]),
            mpg,
            None if mpg is None else repr(1.0 / mpg),
            accel,
            r["DriveWheel"] or None,
            weight,
            r["Fuel"] or None,
            _num(r["Torque"]),
            {"standard": "TRUE", "no/optional": "FALSE"}.get(r["AlarmSystem"]),
            {"standard": "y", "optional": "n", "no": "n"}.get(r["SatNav"]),
        ])
    _write(OUT / "topgear.csv", header, rows)


PURPOSE = {
    "A40": "n.car", "A41": "u.car", "A42": "furniture", "A43": "TV",
    "A44": "appliances", "A45": "repairs", "A46": "education",
    "A47": "vacation", "A48": "retraining", "A49": "business", "A410": "others",
}


def germancredit(cache: Path) -> None:
    z = _wheel("responsibly", cache)
    text = z.read("responsibly/dataset/german/german.data").decode("ascii")
    header = ["id", "credit", "months", "purpose", "amount", "rate", "age", "sex", "nclients"]
    rows = []
    for i, line in enumerate(text.split("\n"), start=1):
        f = line.split()
        if not f:
            continue
        rows.append([
            str(i),
            1 if f[20] == "1" else 0,  # 1 = good credit
            int(f[1]),
            PURPOSE[f[3]],
            int(f[4]),
            int(f[7]),
            int(f[12]),
            # the published personal-status labels are known to be mixed up;
            # only A92 applicants are male in the corrected coding
            "M" if f[8] == "A92" else "F",
            int(f[17]),
        ])
    _write(OUT / "germancredit.csv", header, rows)


def titanic(cache: Path) -> None:
    z = _wheel("explainerdashboard", cache)
    header = ["name", "y", "pclass", "sex", "age", "sibsp", "parch"]
    rows = []
    for part in ("titanic_train.csv", "titanic_test.csv"):
        text = z.read(f"explainerdashboard/datasets/{part}").decode("utf-8")
        for r in csv.DictReader(io.StringIO(text)):
            age = float(r["Age"])
            if r["Sex_male"] == "1":
                sex = "M"
            elif r["Sex_female"] == "1":
                sex = "F"
            else:
                # one row lost its one-hot flag; the Kaggle record is female ("Mrs.")
                sex = "F" if ("Mrs." in r["Name"] or "Miss." in r["Name"]) else None
            rows.append([
                r["Name"],
                int(r["Survival"]),
                int(r["PassengerClass"]),
                sex,
                None if age == -999 else age,
                int(r["No_of_siblings_plus_spouses_on_board"]),
                int(r["No_of_parents_plus_children_on_board"]),
            ])
    _write(OUT / "titanic.csv", header, rows)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cache", type=Path, default=Path("/tmp/predterms-wheels"))
    args = ap.parse_args()
    args.cache.mkdir(parents=True, exist_ok=True)
    OUT.mkdir(parents=True, exist_ok=True)
    topgear(args.cache)
    germancredit(args.cache)
    titanic(args.cache)


if __name__ == "__main__":
    main()
