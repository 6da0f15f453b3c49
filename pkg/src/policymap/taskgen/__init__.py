"""Task artifacts: object catalog, classification dataset, task suites."""

from .catalog import (
    Catalog,
    CatalogEntry,
    color_region,
    load_catalog,
    make_catalog,
    region_of_color,
    sample_color_in_region,
    save_catalog,
)
from .dataset import (
    LabeledImages,
    gen_classification_dataset,
    load_dataset,
    save_dataset,
)
from .tasks import (
    TaskSpec,
    load_task_suite,
    make_saliency_task,
    make_task_suite,
    save_task_suite,
)

__all__ = [
    "Catalog",
    "CatalogEntry",
    "color_region",
    "load_catalog",
    "make_catalog",
    "region_of_color",
    "sample_color_in_region",
    "save_catalog",
    "LabeledImages",
    "gen_classification_dataset",
    "load_dataset",
    "save_dataset",
    "TaskSpec",
    "load_task_suite",
    "make_saliency_task",
    "make_task_suite",
    "save_task_suite",
]
