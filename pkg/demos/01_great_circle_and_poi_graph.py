"""
Great-circle distances and a listing-POI radius graph
======================================================

Distances between two cities, then a small bipartite graph linking
listings to every food POI within one kilometre.
"""
from msie.corpus_io import PoiRecord
from msie.spatial import build_spatial_graph, haversine_km
from msie.synth import SynthConfig, synth_generate

beijing = (39.9042, 116.4074)
shanghai = (31.2304, 121.4737)
print("Beijing -> Shanghai: %.1f km" % haversine_km(beijing, shanghai))

# a few hundred metres in latitude
print("0.01 deg north: %.3f km" % haversine_km(beijing, (beijing[0] + 0.01, beijing[1])))

# a small synthetic city
ds = synth_generate(SynthConfig(n_listings=300, n_pois=60, seed=1))
listings = ds.listings.records
pois = ds.pois.records

g = build_spatial_graph(listings, pois, "Food", radius_km=1.0)
deg = (g.adjacency > 0).sum(axis=1)
print("graph:", g.adjacency.shape, "edges:", int(deg.sum()))
print("mean POIs within 1 km: %.2f, isolated listings: %d" % (deg.mean(), g.isolated.sum()))

# edge weight falls linearly with distance, 1 at the POI itself
lid, pid, d, w = next(iter(g.edges()))
print(f"example edge {lid} -> {pid}: {d:.3f} km, weight {w:.3f}")

# a POI sitting exactly on a listing
p0 = listings[0]
on_top = PoiRecord("X", "Food", p0.latitude, p0.longitude)
print("weight at distance 0:", build_spatial_graph([p0], [on_top], "Food").adjacency[0, 0])
