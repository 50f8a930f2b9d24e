"""geoflow: verified right-invariant geodesic flows, coadjoint-orbit
canonical transforms, and invariant wave operators on low-dimensional Lie
groups."""

__version__ = "0.1.0"
