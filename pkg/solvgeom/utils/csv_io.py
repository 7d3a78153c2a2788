# solvgeom/utils/csv_io.py
# CSV export/import of sampled spaces, maps, geodesic samples, curve
# families and density fields, for plotting outside the package.

import csv
from pathlib import Path

import numpy as np

from ..exceptions import GeometryError
from ..models import SampledMap, SampledSpace


def _open(path, mode):
    path = Path(path)
    if 'w' in mode:
        path.parent.mkdir(parents=True, exist_ok=True)
    return path.open(mode, newline='')


# =============================================================================
# SAMPLED SPACES
# =============================================================================

def write_sampled_space(space, path):
    """Long format: one ``label_i,label_j,distance`` row per unordered pair."""
    with _open(path, 'w') as f:
        writer = csv.writer(f)
        writer.writerow(['kind', space.kind, 'basepoint', space.basepoint or ''])
        writer.writerow(['label_i', 'label_j', 'distance'])
        rows, cols = space.pairs()
        for i, j in zip(rows, cols):
            writer.writerow([space.labels[i], space.labels[j], repr(float(space.dist[i, j]))])
        # Isolated labels would otherwise be lost for a one-point space
        for label in space.labels:
            writer.writerow([label, label, '0.0'])


def read_sampled_space(path):
    with _open(path, 'r') as f:
        reader = csv.reader(f)
        header = next(reader)
        if len(header) < 4 or header[0] != 'kind':
            raise GeometryError(f'{path}: not a sampled-space file')
        kind, basepoint = header[1], header[3] or None
        next(reader)
        entries = [(a, b, float(d)) for a, b, d in reader]

    labels = []
    for a, b, _ in entries:
        for label in (a, b):
            if label not in labels:
                labels.append(label)
    index = {label: k for k, label in enumerate(labels)}
    dist = np.zeros((len(labels), len(labels)))
    for a, b, d in entries:
        dist[index[a], index[b]] = dist[index[b], index[a]] = d
    return SampledSpace(labels=labels, dist=dist, kind=kind, basepoint=basepoint)


# =============================================================================
# MAPS, GEODESICS, CURVES, DENSITIES
# =============================================================================

def write_sampled_map(sampled_map, path):
    n = sampled_map.domain.shape[1]
    with _open(path, 'w') as f:
        writer = csv.writer(f)
        writer.writerow([f'x{k + 1}' for k in range(n)] + [f'fx{k + 1}' for k in range(n)])
        writer.writerows(np.hstack([sampled_map.domain, sampled_map.image]).tolist())


def read_sampled_map(path, name=''):
    """Point-pair file: first half of each row is the domain point, second the image."""
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    if data.shape[1] % 2:
        raise GeometryError(f'{path}: expected an even number of columns')
    half = data.shape[1] // 2
    return SampledMap(domain=data[:, :half], image=data[:, half:], name=name or Path(path).stem)


def write_geodesic(path_samples, path):
    n = path_samples.samples.shape[1] - 1
    with _open(path, 'w') as f:
        writer = csv.writer(f)
        writer.writerow(['s'] + [f'x{k + 1}' for k in range(n)] + ['t'])
        writer.writerows(np.column_stack([path_samples.params, path_samples.samples]).tolist())


def write_curve_family(family, path):
    n = len(family.box_lo)
    with _open(path, 'w') as f:
        writer = csv.writer(f)
        writer.writerow(['curve', 'vertex'] + [f'x{k + 1}' for k in range(n)])
        for c, curve in enumerate(family.curves):
            for v, vertex in enumerate(curve):
                writer.writerow([c, v] + vertex.tolist())


def write_density(density, path):
    n = len(density.box_lo)
    with _open(path, 'w') as f:
        writer = csv.writer(f)
        writer.writerow([f'c{k + 1}' for k in range(n)] + ['rho'])
        for center, value in zip(density.cell_centers(), density.rho):
            writer.writerow(center.tolist() + [float(value)])
