import io

import pytest

from pathorder.constraint import parse_edge_lines
from pathorder.pathdata import count, ingest


@pytest.fixture
def star():
    # undirected star: center a, leaves b and c
    return parse_edge_lines(io.StringIO("a,b\na,c\n"), undirected=True)


@pytest.fixture
def star_data(star):
    # two copies of a->b, one a->c: 6 transitions including the starts
    return ingest(io.StringIO("a,b,2\na,c,1\n"), star, freq_column=True)


@pytest.fixture
def star_counts(star, star_data):
    return count(star_data, star, 1)


@pytest.fixture
def cycle3():
    return parse_edge_lines(io.StringIO("a,b\nb,c\nc,a\n"))


def make_graph(text, **kw):
    return parse_edge_lines(io.StringIO(text), **kw)


def make_paths(text, g, **kw):
    return ingest(io.StringIO(text), g, **kw)
