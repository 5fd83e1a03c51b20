//! Synthetic city maps, district sampling and scenario generation.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::world::{Params, Scenario, Vertex, VertexId, WorldGraph};

/// Layout knobs for [`synthetic_city`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CityLayout {
    pub blocks_x: u32,
    pub blocks_y: u32,
    /// Distance between intersections in meters.
    pub block_length: f64,
    /// Road vertices per street segment between two intersections.
    pub segments: u32,
    /// Perpendicular distance of buildings from the street axis.
    pub setback: f64,
    /// Chance that a lot beside a road vertex holds a building.
    pub lot_density: f64,
    /// Chance that a street segment is missing (kept if needed for connectivity).
    pub missing_streets: f64,
    pub min_area: f64,
    pub max_area: f64,
    /// Uniform positional noise in meters.
    pub jitter: f64,
    /// Road vertices on the access path between a street and each building.
    pub driveway: u32,
}

/// Five layouts of different texture, standing in for real city maps.
pub const CITY_LAYOUTS: [CityLayout; 5] = [
    CityLayout {
        blocks_x: 6,
        blocks_y: 5,
        block_length: 90.0,
        segments: 3,
        setback: 12.0,
        lot_density: 0.8,
        missing_streets: 0.1,
        min_area: 150.0,
        max_area: 900.0,
        jitter: 4.0,
        driveway: 2,
    },
    CityLayout {
        blocks_x: 5,
        blocks_y: 5,
        block_length: 120.0,
        segments: 4,
        setback: 15.0,
        lot_density: 0.6,
        missing_streets: 0.15,
        min_area: 200.0,
        max_area: 1600.0,
        jitter: 6.0,
        driveway: 2,
    },
    CityLayout {
        blocks_x: 8,
        blocks_y: 4,
        block_length: 70.0,
        segments: 2,
        setback: 10.0,
        lot_density: 0.9,
        missing_streets: 0.05,
        min_area: 100.0,
        max_area: 600.0,
        jitter: 3.0,
        driveway: 2,
    },
    CityLayout {
        blocks_x: 5,
        blocks_y: 6,
        block_length: 100.0,
        segments: 3,
        setback: 14.0,
        lot_density: 0.7,
        missing_streets: 0.2,
        min_area: 120.0,
        max_area: 1200.0,
        jitter: 8.0,
        driveway: 2,
    },
    CityLayout {
        blocks_x: 7,
        blocks_y: 7,
        block_length: 80.0,
        segments: 3,
        setback: 11.0,
        lot_density: 0.75,
        missing_streets: 0.12,
        min_area: 80.0,
        max_area: 700.0,
        jitter: 5.0,
        driveway: 2,
    },
];

/// The five built-in maps, one per layout, from fixed seeds.
pub fn builtin_cities() -> Vec<WorldGraph> {
    CITY_LAYOUTS
        .iter()
        .enumerate()
        .map(|(i, layout)| synthetic_city(layout, 1000 + i as u64))
        .collect()
}

/// A street grid with road vertices along each street and buildings on lots
/// beside them. Every building hangs off one road vertex.
pub fn synthetic_city(layout: &CityLayout, seed: u64) -> WorldGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = layout.blocks_x + 1;
    let ny = layout.blocks_y + 1;
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-layout.jitter..=layout.jitter);

    let add = |vertices: &mut Vec<Vertex>, mut v: Vertex| {
        let id = VertexId::from_index(vertices.len());
        v.id = id;
        vertices.push(v);
        id
    };
    let mut intersections = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let x = f64::from(i) * layout.block_length + jitter(&mut rng);
            let y = f64::from(j) * layout.block_length + jitter(&mut rng);
            intersections.push(add(&mut vertices, Vertex::road(0, x, y)));
        }
    }

    // streets: (from, to, horizontal)
    let mut streets = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let here = intersections[(j * nx + i) as usize];
            if i + 1 < nx {
                streets.push((here, intersections[(j * nx + i + 1) as usize], true));
            }
            if j + 1 < ny {
                streets.push((here, intersections[((j + 1) * nx + i) as usize], false));
            }
        }
    }
    // Drop streets at random but keep a spanning set so the map stays connected.
    let mut order: Vec<usize> = (0..streets.len()).collect();
    order.shuffle(&mut rng);
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut keep = vec![false; streets.len()];
    for &s in &order {
        let (a, b, _) = streets[s];
        let (ra, rb) = (find(&mut parent, a.index()), find(&mut parent, b.index()));
        if ra != rb {
            parent[ra] = rb;
            keep[s] = true;
        }
    }
    for k in keep.iter_mut() {
        if !*k && rng.gen::<f64>() >= layout.missing_streets {
            *k = true;
        }
    }

    for (s, &(a, b, horizontal)) in streets.iter().enumerate() {
        if !keep[s] {
            continue;
        }
        let pa = vertices[a.index()].position;
        let pb = vertices[b.index()].position;
        let mut prev = a;
        for step in 1..=layout.segments {
            let f = f64::from(step) / f64::from(layout.segments + 1);
            let x = pa.x + (pb.x - pa.x) * f;
            let y = pa.y + (pb.y - pa.y) * f;
            let road = add(&mut vertices, Vertex::road(0, x + jitter(&mut rng), y + jitter(&mut rng)));
            edges.push((prev, road));
            prev = road;
            for side in [-1.0, 1.0] {
                if rng.gen::<f64>() >= layout.lot_density {
                    continue;
                }
                let (bx, by) = if horizontal {
                    (x, y + side * layout.setback)
                } else {
                    (x + side * layout.setback, y)
                };
                let area = (layout.min_area.ln() + rng.gen::<f64>() * (layout.max_area / layout.min_area).ln()).exp().round();
                let (bx, by) = (bx + jitter(&mut rng), by + jitter(&mut rng));
                let mut access = road;
                for i in 1..=layout.driveway {
                    let f = f64::from(i) / f64::from(layout.driveway + 1);
                    let drive = add(&mut vertices, Vertex::road(0, x + (bx - x) * f, y + (by - y) * f));
                    edges.push((access, drive));
                    access = drive;
                }
                let building = add(&mut vertices, Vertex::building(0, area, bx, by));
                edges.push((access, building));
            }
        }
        edges.push((prev, b));
    }
    WorldGraph::new(vertices, &edges).expect("generated city is a valid connected graph")
}

/// Grows a connected district breadth-first from a random building until it
/// holds `buildings` buildings, keeping the BFS-tree paths back to the seed.
/// Vertices are re-indexed in ascending order of their map ids.
pub fn sample_district<R: Rng + ?Sized>(map: &WorldGraph, buildings: usize, rng: &mut R) -> Result<WorldGraph> {
    let available = map.buildings().len();
    if buildings == 0 || buildings > available {
        return Err(Error::InsufficientBuildings {
            required: buildings,
            available,
        });
    }
    let seed = *map.buildings().choose(rng).expect("map has buildings");
    let mut parent = vec![None; map.len()];
    let mut seen = vec![false; map.len()];
    seen[seed.index()] = true;
    let mut queue = VecDeque::from([seed]);
    let mut keep: BTreeSet<VertexId> = BTreeSet::new();
    let mut found = 0;
    while let Some(u) = queue.pop_front() {
        if map.is_building(u) {
            found += 1;
            let mut cur = Some(u);
            while let Some(c) = cur {
                if !keep.insert(c) {
                    break;
                }
                cur = parent[c.index()];
            }
            if found == buildings {
                break;
            }
        }
        for &w in map.neighbors(u) {
            if !seen[w.index()] {
                seen[w.index()] = true;
                parent[w.index()] = Some(u);
                queue.push_back(w);
            }
        }
    }
    induced_subgraph(map, &keep)
}

fn induced_subgraph(map: &WorldGraph, keep: &BTreeSet<VertexId>) -> Result<WorldGraph> {
    let ids: Vec<VertexId> = keep.iter().copied().collect();
    let local = |v: VertexId| ids.binary_search(&v).ok().map(VertexId::from_index);
    let vertices = ids
        .iter()
        .enumerate()
        .map(|(i, &v)| Vertex {
            id: VertexId::from_index(i),
            ..map.vertex(v).clone()
        })
        .collect();
    let edges: Vec<_> = map
        .edges()
        .into_iter()
        .filter_map(|(a, b)| Some((local(a)?, local(b)?)))
        .collect();
    WorldGraph::new(vertices, &edges)
}

/// Uniform ignitions without replacement and uniform agent starts.
pub fn generate_scenario<R: Rng + ?Sized>(
    district: &WorldGraph,
    ignitions: usize,
    agents: usize,
    params: Params,
    rng: &mut R,
) -> Result<Scenario> {
    let buildings = district.buildings();
    if ignitions > buildings.len() {
        return Err(Error::InsufficientBuildings {
            required: ignitions,
            available: buildings.len(),
        });
    }
    let fires: BTreeSet<VertexId> = buildings.choose_multiple(rng, ignitions).copied().collect();
    let starts = (0..agents)
        .map(|_| VertexId::from_index(rng.gen_range(0..district.len())))
        .collect();
    Scenario::new(district.clone(), fires, starts, params)
}
