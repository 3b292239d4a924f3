import numpy as np
import pytest

from orbital.errors import DimensionMismatch
from orbital.export import (
    atoms_csv,
    density_pixels,
    export_cdf_csv,
    read_atoms_csv,
    read_pgm,
    render_density,
    write_atoms_csv,
    write_study_csv,
)
from orbital.measure import DiscreteMeasure
from orbital.series import enumerate_series, neumann_iterate

from conftest import dirac, exercise, halves


def test_cdf_csv_examples(tmp_path):
    path = tmp_path / "c.csv"
    export_cdf_csv(dirac(0.5), path)
    assert path.read_text() == "x,cdf\n0.5,1\n"
    export_cdf_csv(DiscreteMeasure([[1.0], [0.0]], [0.5, 0.5]), path)
    assert path.read_text() == "x,cdf\n0,0.5\n1,1\n"
    export_cdf_csv(enumerate_series(exercise(), 3).measure, path)
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == 4 and rows[-1].endswith(",1")
    with pytest.raises(DimensionMismatch):
        export_cdf_csv(dirac(0.0, 0.0), path)


def test_atom_csv_round_trip(tmp_path):
    path = tmp_path / "a.csv"
    for m in (enumerate_series(halves(p=0.3), 6).measure, DiscreteMeasure([[0.1, 1 / 3], [np.pi, -2.5]], [0.3, 0.7])):
        write_atoms_csv(m, path)
        back = read_atoms_csv(path)
        assert back.atoms.tobytes() == m.atoms.tobytes()
        assert back.weights.tobytes() == m.weights.tobytes()


def test_atom_csv_header():
    assert atoms_csv(dirac(0.5)).splitlines()[0] == "x,weight"
    assert atoms_csv(dirac(0.5, 1.0)).splitlines()[0] == "x,y,weight"


def test_routes_write_identical_files(tmp_path):
    for sys in (exercise(), halves(), halves(p=0.25)):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_atoms_csv(enumerate_series(sys, 8).measure, a)
        write_atoms_csv(neumann_iterate(sys, 8, prune_tol=0.0).measure, b)
        assert a.read_bytes() == b.read_bytes()


def test_study_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_study_csv([(0.5, 0.9375)], path)
    assert path.read_text() == "p,mass\n0.5,0.9375\n"


def test_render_examples():
    box = [(0, 1), (0, 1)]
    px = density_pixels(dirac(0.5, 0.5), box, (3, 3))
    assert px.sum() == 255 and px[1, 1] == 255
    corners = DiscreteMeasure([[0, 0], [1, 0], [0, 1], [1, 1]], [0.25] * 4)
    assert density_pixels(corners, box, (2, 2)).tolist() == [[255, 255], [255, 255]]


def test_render_orientation():
    # an atom near max y lands in the top image row
    px = density_pixels(DiscreteMeasure([[0.1, 0.9], [0.9, 0.1]], [0.75, 0.25]), [(0, 1), (0, 1)], (2, 2))
    assert px.tolist() == [[255, 0], [0, 85]]


def test_render_empty_box_warns(caplog):
    with caplog.at_level("WARNING"):
        px = density_pixels(dirac(5.0, 5.0), [(0, 1), (0, 1)], (4, 4))
    assert px.sum() == 0 and "no mass" in caplog.text


def test_pgm_bytes(tmp_path):
    path = tmp_path / "img.pgm"
    m = DiscreteMeasure([[0.1, 0.2], [0.6, 0.7], [0.3, 0.3]], [0.2, 0.5, 0.3])
    data = render_density(m, [(0, 1), (0, 1)], (4, 3), "log", path)
    assert data.startswith(b"P5\n4 3\n255\n") and len(data) == len(b"P5\n4 3\n255\n") + 12
    assert path.read_bytes() == data == render_density(m, [(0, 1), (0, 1)], (4, 3), "log")
    assert read_pgm(path).shape == (3, 4)
    with pytest.raises(DimensionMismatch):
        render_density(dirac(0.0), [(0, 1)], 4)
