//! Benchmark scenario synthesis: an irregular grid network with perimeter
//! origins/destinations, a uniformly sampled ground-truth demand, derived
//! bounds and trip productions, and optional low/high prior demand vectors.
//!
//! Everything is a pure function of explicit RNG seeds, so a scenario can be
//! regenerated bit-for-bit from its parameter block.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SueConfig;
use crate::types::{
    demand_index, ArcId, Bounds, CountVector, DemandVector, NodeId, SeedKind, TimeGrid,
    TripProductions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub id: ArcId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub lanes: u32,
    pub speed_kmh: f64,
    pub sensor: bool,
}

impl Arc {
    pub fn free_flow_time_s(&self) -> f64 {
        self.length_m / (self.speed_kmh / 3.6)
    }
}

/// Directed road network with marked origins, destinations and sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    pub origins: Vec<NodeId>,
    pub destinations: Vec<NodeId>,
}

impl Network {
    /// Sensor-equipped arcs in ascending arc order; position in this list is
    /// the sensor index used by count vectors.
    pub fn sensor_arcs(&self) -> Vec<ArcId> {
        self.arcs.iter().filter(|a| a.sensor).map(|a| a.id).collect()
    }

    /// Outgoing arc ids per node.
    pub fn out_arcs(&self) -> Vec<Vec<ArcId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for arc in &self.arcs {
            out[arc.from.0].push(arc.id);
        }
        out
    }
}

/// Ordered OD pairs (origin, destination), origin != destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OdSet {
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl OdSet {
    pub fn m(&self) -> usize {
        self.pairs.len()
    }
}

/// Lay out a rows x cols lattice at `base_length_m` spacing, jitter every
/// node coordinate by an independent U(0, jitter_max_m) draw, and connect
/// each lattice adjacency with two opposing directed arcs whose length is
/// the Euclidean distance between the perturbed endpoints. Perimeter nodes
/// become both origins and destinations; every arc carries a sensor.
pub fn build_irregular_grid(
    rows: usize,
    cols: usize,
    base_length_m: f64,
    speed_kmh: f64,
    jitter_max_m: f64,
    lanes: u32,
    rng_seed: u64,
) -> Result<Network> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidGridDimension { rows, cols });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut jitter = |rng: &mut ChaCha8Rng| {
        if jitter_max_m > 0.0 {
            rng.random_range(0.0..jitter_max_m)
        } else {
            0.0
        }
    };

    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let id = NodeId(r * cols + c);
            let x_m = c as f64 * base_length_m + jitter(&mut rng);
            let y_m = r as f64 * base_length_m + jitter(&mut rng);
            nodes.push(Node { id, x_m, y_m });
        }
    }

    let mut arcs = Vec::new();
    let mut connect = |arcs: &mut Vec<Arc>, a: NodeId, b: NodeId| {
        let (na, nb) = (&nodes[a.0], &nodes[b.0]);
        let length_m = ((na.x_m - nb.x_m).powi(2) + (na.y_m - nb.y_m).powi(2)).sqrt();
        for (from, to) in [(a, b), (b, a)] {
            arcs.push(Arc {
                id: ArcId(arcs.len()),
                from,
                to,
                length_m,
                lanes,
                speed_kmh,
                sensor: true,
            });
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let here = NodeId(r * cols + c);
            if c + 1 < cols {
                connect(&mut arcs, here, NodeId(r * cols + c + 1));
            }
            if r + 1 < rows {
                connect(&mut arcs, here, NodeId((r + 1) * cols + c));
            }
        }
    }

    let perimeter: Vec<NodeId> = (0..rows * cols)
        .filter(|id| {
            let (r, c) = (id / cols, id % cols);
            r == 0 || r == rows - 1 || c == 0 || c == cols - 1
        })
        .map(NodeId)
        .collect();

    Ok(Network {
        nodes,
        arcs,
        origins: perimeter.clone(),
        destinations: perimeter,
    })
}

/// All ordered (origin, destination) pairs with distinct endpoints, in
/// ascending (origin, destination) order.
pub fn enumerate_od_pairs(network: &Network) -> OdSet {
    let mut pairs = Vec::new();
    for &o in &network.origins {
        for &d in &network.destinations {
            if o != d {
                pairs.push((o, d));
            }
        }
    }
    OdSet { pairs }
}

/// Independent U(a, b) draw per demand cell.
pub fn sample_ground_truth(
    od: &OdSet,
    grid: &TimeGrid,
    a: f64,
    b: f64,
    rng_seed: u64,
) -> Result<DemandVector> {
    if a > b || a < 0.0 {
        return Err(Error::InvalidRange { low: a, high: b });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = (0..od.m() * grid.n_intervals)
        .map(|_| if a == b { a } else { rng.random_range(a..b) })
        .collect();
    Ok(DemandVector::new(values))
}

/// Lower bound zero, upper bound 1.5x the largest ground-truth entry.
pub fn derive_bounds(x_true: &DemandVector) -> Bounds {
    let upper = 1.5 * x_true.max_value();
    Bounds {
        lower: vec![0.0; x_true.len()],
        upper: vec![upper; x_true.len()],
    }
}

/// Per-origin cap equal to the total ground-truth outbound trips, so the
/// ground truth saturates its own generation constraints.
pub fn derive_trip_productions(x_true: &DemandVector, od: &OdSet, grid: &TimeGrid) -> TripProductions {
    let mut origins: Vec<NodeId> = od.pairs.iter().map(|(o, _)| *o).collect();
    origins.sort_unstable();
    origins.dedup();
    let caps = origins
        .into_iter()
        .map(|origin| {
            let mut sum = 0.0;
            for (w, (o, _)) in od.pairs.iter().enumerate() {
                if *o == origin {
                    for s in 0..grid.n_intervals {
                        sum += x_true.values[demand_index(w, s, grid.n_intervals)];
                    }
                }
            }
            (origin, sum)
        })
        .collect();
    TripProductions { caps }
}

/// Scale the ground truth into a prior demand vector: LD draws each entry in
/// [0.7, 1.0) of the truth, HD in [0.9, 1.2).
pub fn make_seed_demand(
    x_true: &DemandVector,
    kind: SeedKind,
    rng_seed: u64,
) -> Option<DemandVector> {
    let base = match kind {
        SeedKind::None => return None,
        SeedKind::Ld => 0.7,
        SeedKind::Hd => 0.9,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = x_true
        .values
        .iter()
        .map(|&x| x * (base + 0.3 * rng.random_range(0.0..1.0)))
        .collect();
    Some(DemandVector::new(values))
}

/// Generation constraints in evaluable form: for each origin, its cap and
/// the flat demand indices that count against it.
#[derive(Debug, Clone)]
pub struct GenerationConstraints {
    pub groups: Vec<(f64, Vec<usize>)>,
}

// Relative tolerance for "sum exceeds cap" tests, so a vector that saturates
// its caps exactly (the ground truth) stays feasible under fp roundoff.
const GEN_EPS: f64 = 1e-9;

impl GenerationConstraints {
    pub fn new(od: &OdSet, grid: &TimeGrid, productions: &TripProductions) -> Self {
        let groups = productions
            .caps
            .iter()
            .map(|&(origin, cap)| {
                let mut cells = Vec::new();
                for (w, (o, _)) in od.pairs.iter().enumerate() {
                    if *o == origin {
                        for s in 0..grid.n_intervals {
                            cells.push(demand_index(w, s, grid.n_intervals));
                        }
                    }
                }
                (cap, cells)
            })
            .collect();
        Self { groups }
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.groups.iter().all(|(cap, cells)| {
            let sum: f64 = cells.iter().map(|&i| x[i]).sum();
            sum <= cap + GEN_EPS * cap.max(1.0)
        })
    }

    /// Cap minus outbound sum per origin, in production order.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|(cap, cells)| cap - cells.iter().map(|&i| x[i]).sum::<f64>())
            .collect()
    }

    /// Uniformly scale down every offending origin's cells until its sum
    /// meets the cap. With a zero lower bound this preserves box membership.
    pub fn project(&self, x: &mut [f64]) {
        for (cap, cells) in &self.groups {
            let sum: f64 = cells.iter().map(|&i| x[i]).sum();
            if sum > *cap && sum > 0.0 {
                let scale = cap / sum;
                for &i in cells {
                    x[i] *= scale;
                }
            }
        }
    }
}

/// Everything needed to regenerate a scenario from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub rows: usize,
    pub cols: usize,
    pub base_length_m: f64,
    pub speed_kmh: f64,
    pub jitter_max_m: f64,
    pub lanes: u32,
    pub t_end_s: f64,
    pub n_intervals: usize,
    pub demand_low: f64,
    pub demand_high: f64,
    /// Truncate the OD set to the first `n` pairs (small test scenarios).
    pub max_od_pairs: Option<usize>,
    pub network_seed: u64,
    pub truth_seed: u64,
    pub ld_seed: u64,
    pub hd_seed: u64,
    pub sue: SueConfig,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            base_length_m: 1250.0,
            speed_kmh: 50.0,
            jitter_max_m: 1250.0,
            lanes: 1,
            t_end_s: 3600.0,
            n_intervals: 4,
            demand_low: 1.0,
            demand_high: 20.0,
            max_od_pairs: None,
            network_seed: 1,
            truth_seed: 2,
            ld_seed: 3,
            hd_seed: 4,
            sue: SueConfig::default(),
        }
    }
}

/// A complete benchmark instance, serialized as a single JSON document so
/// every experiment is replayable. Demand vectors are flat arrays indexed
/// `od_index * n_intervals + interval`; observed counts are indexed
/// `sensor_position * n_intervals + interval` (both zero-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub network: Network,
    pub time_grid: TimeGrid,
    pub od_pairs: OdSet,
    pub index_legend: String,
    pub ground_truth: DemandVector,
    pub bounds: Bounds,
    pub productions: TripProductions,
    pub seed_ld: DemandVector,
    pub seed_hd: DemandVector,
    pub observed_counts: CountVector,
}

impl Scenario {
    /// Number of demand variables, m * n_S.
    pub fn dim(&self) -> usize {
        self.od_pairs.m() * self.time_grid.n_intervals
    }

    pub fn sue(&self) -> &SueConfig {
        &self.params.sue
    }

    pub fn seed(&self, kind: SeedKind) -> Option<&DemandVector> {
        match kind {
            SeedKind::None => None,
            SeedKind::Ld => Some(&self.seed_ld),
            SeedKind::Hd => Some(&self.seed_hd),
        }
    }

    pub fn generation(&self) -> GenerationConstraints {
        GenerationConstraints::new(&self.od_pairs, &self.time_grid, &self.productions)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut writer, self)?;
        use std::io::Write;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Build the full benchmark instance: network, OD pairs, ground truth,
/// bounds, productions, both priors, and the observed counts produced by
/// running the simulator on the ground truth.
pub fn generate_scenario(params: ScenarioParams) -> Result<Scenario> {
    let network = build_irregular_grid(
        params.rows,
        params.cols,
        params.base_length_m,
        params.speed_kmh,
        params.jitter_max_m,
        params.lanes,
        params.network_seed,
    )?;
    let time_grid = TimeGrid::new(params.t_end_s, params.n_intervals)?;
    let mut od_pairs = enumerate_od_pairs(&network);
    if let Some(limit) = params.max_od_pairs {
        od_pairs.pairs.truncate(limit);
    }
    let ground_truth = sample_ground_truth(
        &od_pairs,
        &time_grid,
        params.demand_low,
        params.demand_high,
        params.truth_seed,
    )?;
    if ground_truth.max_value() == 0.0 {
        eprintln!("warning: all-zero ground truth yields a degenerate scenario (upper bounds are zero)");
    }
    let bounds = derive_bounds(&ground_truth);
    let productions = derive_trip_productions(&ground_truth, &od_pairs, &time_grid);
    let seed_ld = make_seed_demand(&ground_truth, SeedKind::Ld, params.ld_seed)
        .expect("LD seed is always present");
    let seed_hd = make_seed_demand(&ground_truth, SeedKind::Hd, params.hd_seed)
        .expect("HD seed is always present");

    let result = crate::sim::assign(
        &ground_truth,
        &network,
        &od_pairs,
        &time_grid,
        &params.sue,
    )?;

    Ok(Scenario {
        params,
        network,
        time_grid,
        od_pairs,
        index_legend: "demand[w*n_intervals+s] for od_pairs[w] departing in interval s; \
                       counts[q*n_intervals+r] for sensor_arcs[q] observed in interval r"
            .into(),
        ground_truth,
        bounds,
        productions,
        seed_ld,
        seed_hd,
        observed_counts: result.counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, jitter: f64, seed: u64) -> Network {
        build_irregular_grid(rows, cols, 1250.0, 50.0, jitter, 1, seed).unwrap()
    }

    /// Count directed lattice adjacencies by brute force.
    fn brute_force_arc_count(rows: usize, cols: usize) -> usize {
        let mut count = 0;
        for a in 0..rows * cols {
            for b in 0..rows * cols {
                let (ra, ca) = (a / cols, a % cols);
                let (rb, cb) = (b / cols, b % cols);
                if ra.abs_diff(rb) + ca.abs_diff(cb) == 1 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn benchmark_grid_shape() {
        let net = grid(4, 4, 1250.0, 7);
        assert_eq!(net.nodes.len(), 16);
        assert_eq!(net.arcs.len(), 48);
        assert_eq!(net.origins.len(), 12);
        assert_eq!(net.destinations.len(), 12);
        assert_eq!(net.sensor_arcs().len(), 48);
    }

    #[test]
    fn zero_jitter_grid_has_lattice_lengths() {
        let net = grid(2, 2, 0.0, 0);
        assert_eq!(net.nodes.len(), 4);
        assert_eq!(net.arcs.len(), 8);
        for arc in &net.arcs {
            assert_eq!(arc.length_m, 1250.0);
        }
    }

    #[test]
    fn three_by_two_grid() {
        let net = build_irregular_grid(3, 2, 1000.0, 50.0, 0.0, 1, 0).unwrap();
        assert_eq!(net.nodes.len(), 6);
        assert_eq!(net.arcs.len(), 14);
        assert_eq!(net.arcs.len(), brute_force_arc_count(3, 2));
    }

    #[test]
    fn arc_count_formula_matches_brute_force() {
        for rows in 2..=6 {
            for cols in 2..=6 {
                let net = grid(rows, cols, 500.0, 11);
                let formula = 2 * (2 * rows * cols - rows - cols);
                assert_eq!(net.arcs.len(), formula);
                assert_eq!(net.arcs.len(), brute_force_arc_count(rows, cols));
            }
        }
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(matches!(
            build_irregular_grid(1, 4, 1250.0, 50.0, 0.0, 1, 0),
            Err(Error::InvalidGridDimension { .. })
        ));
        assert!(build_irregular_grid(2, 1, 1250.0, 50.0, 0.0, 1, 0).is_err());
    }

    #[test]
    fn network_is_deterministic() {
        assert_eq!(grid(4, 4, 1250.0, 99), grid(4, 4, 1250.0, 99));
        assert_ne!(grid(4, 4, 1250.0, 99), grid(4, 4, 1250.0, 98));
    }

    #[test]
    fn od_enumeration() {
        let net = grid(4, 4, 1250.0, 7);
        let od = enumerate_od_pairs(&net);
        assert_eq!(od.m(), 132);
        for (o, d) in &od.pairs {
            assert_ne!(o, d);
        }

        // Single shared node yields no pairs; two nodes yield both orders.
        let mut tiny = grid(2, 2, 0.0, 0);
        tiny.origins = vec![NodeId(0)];
        tiny.destinations = vec![NodeId(0)];
        assert_eq!(enumerate_od_pairs(&tiny).m(), 0);
        tiny.origins = vec![NodeId(0), NodeId(1)];
        tiny.destinations = vec![NodeId(0), NodeId(1)];
        let od = enumerate_od_pairs(&tiny);
        assert_eq!(od.pairs, vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))]);
    }

    #[test]
    fn ground_truth_sampling() {
        let net = grid(4, 4, 1250.0, 7);
        let od = enumerate_od_pairs(&net);
        let tg = TimeGrid::new(3600.0, 4).unwrap();
        let x = sample_ground_truth(&od, &tg, 1.0, 20.0, 5).unwrap();
        assert_eq!(x.len(), 528);
        assert!(x.values.iter().all(|&v| (1.0..20.0).contains(&v)));

        let again = sample_ground_truth(&od, &tg, 1.0, 20.0, 5).unwrap();
        assert_eq!(x, again);

        let degenerate = sample_ground_truth(&od, &tg, 5.0, 5.0, 5).unwrap();
        assert!(degenerate.values.iter().all(|&v| v == 5.0));

        assert!(matches!(
            sample_ground_truth(&od, &tg, 2.0, 1.0, 5),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn bounds_from_truth() {
        let b = derive_bounds(&DemandVector::new(vec![3.0, 20.0, 7.0]));
        assert!(b.lower.iter().all(|&l| l == 0.0));
        assert!(b.upper.iter().all(|&u| u == 30.0));

        let b = derive_bounds(&DemandVector::new(vec![18.4, 1.0]));
        assert!((b.upper[0] - 27.6).abs() < 1e-12);

        let b = derive_bounds(&DemandVector::zeros(4));
        assert!(b.upper.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn productions_saturate_ground_truth() {
        let tg = TimeGrid::new(900.0, 1).unwrap();
        let od = OdSet {
            pairs: vec![(NodeId(0), NodeId(1)), (NodeId(0), NodeId(2))],
        };
        let x = DemandVector::new(vec![3.0, 4.0]);
        let prod = derive_trip_productions(&x, &od, &tg);
        assert_eq!(prod.caps, vec![(NodeId(0), 7.0)]);

        let zeros = DemandVector::zeros(2);
        let prod = derive_trip_productions(&zeros, &od, &tg);
        assert!(prod.caps.iter().all(|(_, cap)| *cap == 0.0));
    }

    #[test]
    fn productions_conserve_total_demand() {
        let net = grid(4, 4, 1250.0, 7);
        let od = enumerate_od_pairs(&net);
        let tg = TimeGrid::new(3600.0, 4).unwrap();
        let x = sample_ground_truth(&od, &tg, 1.0, 20.0, 5).unwrap();
        let prod = derive_trip_productions(&x, &od, &tg);
        let cap_total: f64 = prod.caps.iter().map(|(_, c)| c).sum();
        let demand_total: f64 = x.values.iter().sum();
        assert!((cap_total - demand_total).abs() < 1e-9 * demand_total);

        // The truth is feasible with zero slack at every origin.
        let gen = GenerationConstraints::new(&od, &tg, &prod);
        assert!(gen.is_feasible(&x.values));
        for slack in gen.slacks(&x.values) {
            assert!(slack.abs() < 1e-9);
        }
    }

    #[test]
    fn seed_demand_ranges() {
        let x = DemandVector::new(vec![10.0; 256]);
        assert!(make_seed_demand(&x, SeedKind::None, 0).is_none());

        let ld = make_seed_demand(&x, SeedKind::Ld, 1).unwrap();
        assert!(ld.values.iter().all(|&v| (7.0..10.0).contains(&v)));

        let hd = make_seed_demand(&x, SeedKind::Hd, 1).unwrap();
        assert!(hd.values.iter().all(|&v| (9.0..12.0).contains(&v)));

        let zeros = DemandVector::zeros(8);
        let ld = make_seed_demand(&zeros, SeedKind::Ld, 1).unwrap();
        assert!(ld.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seed_demand_brackets_truth_elementwise() {
        let net = grid(3, 3, 800.0, 3);
        let od = enumerate_od_pairs(&net);
        let tg = TimeGrid::new(1800.0, 2).unwrap();
        let x = sample_ground_truth(&od, &tg, 1.0, 20.0, 9).unwrap();
        let ld = make_seed_demand(&x, SeedKind::Ld, 17).unwrap();
        let hd = make_seed_demand(&x, SeedKind::Hd, 18).unwrap();
        for ((&t, &l), &h) in x.values.iter().zip(&ld.values).zip(&hd.values) {
            assert!(l >= 0.7 * t && l < t);
            assert!(h >= 0.9 * t && h < 1.2 * t);
        }
    }

    #[test]
    fn generation_projection() {
        let tg = TimeGrid::new(900.0, 1).unwrap();
        let od = OdSet {
            pairs: vec![(NodeId(0), NodeId(1)), (NodeId(0), NodeId(2)), (NodeId(1), NodeId(0))],
        };
        let prod = TripProductions {
            caps: vec![(NodeId(0), 6.0), (NodeId(1), 5.0)],
        };
        let gen = GenerationConstraints::new(&od, &tg, &prod);
        let mut x = vec![6.0, 6.0, 2.0];
        assert!(!gen.is_feasible(&x));
        gen.project(&mut x);
        assert!(gen.is_feasible(&x));
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
        assert_eq!(x[2], 2.0);
    }
}
