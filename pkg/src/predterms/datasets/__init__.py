"""Example tables bundled with the package.

``topgear``       Top Gear cars (hp, fuel use, size, ...), car name as row id.
``germancredit``  1000 credit applications, ``credit`` is 1 for good risks.
``titanic``       891 passengers with survival ``y``; ``pclass`` is categorical.
"""

from __future__ import annotations

from importlib import resources

from ..data import ColumnKind, Dataset, read_csv

_TABLES = {
    "topgear": ("topgear.csv", "car", {}),
    "germancredit": ("germancredit.csv", "id", {}),
    "titanic": ("titanic.csv", "name", {"pclass": ColumnKind.CATEGORICAL}),
}

NAMES = tuple(_TABLES)


def dataset_path(name: str) -> str:
    if name not in _TABLES:
        raise KeyError(f"unknown dataset {name!r}; choose from {', '.join(NAMES)}")
    return str(resources.files(__name__).joinpath(_TABLES[name][0]))


def load_dataset(name: str) -> Dataset:
    """Load a bundled table with its row ids and kind overrides applied."""
    path = dataset_path(name)
    _, id_col, kinds = _TABLES[name]
    return read_csv(path, id_column=id_col, kinds=kinds)
