__version__ = "0.1.0"

from . import (
    chains,
    cli,
    exceptions,
    generators,
    graph,
    lab,
    solver,
    split,
    tearsheet,
    unionfind,
    validation,
    walks,
)
