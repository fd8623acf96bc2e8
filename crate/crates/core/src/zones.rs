//! Synthetic clinical-zone scenarios and nearest-main-zone coverage.
//!
//! Each zone carries eight numeric attributes drawn from four logical source
//! tables. Main zones (class 1) draw every attribute from a range lying
//! strictly above the depended-zone (class 2) range, so any non-negative
//! weighting of the min-max scaled attributes separates the classes.
//!
//! No value here describes a real place; all of it is generated.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    self, AttributeSpec, Class, Dataset, DatasetError, SchemaSelection, ID_COLUMN, LABEL_COLUMN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZoneError {
    #[error("BadCounts: n = {n}, k_main = {k_main}")]
    BadCounts { n: usize, k_main: usize },
    #[error("NoMainZone")]
    NoMainZone,
    #[error("NoDependedZone")]
    NoDependedZone,
    #[error("UnlabeledZone: {0}")]
    UnlabeledZone(String),
    #[error("WriteFailed: {0}")]
    WriteFailed(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl ZoneError {
    pub fn kind(&self) -> &'static str {
        match self {
            ZoneError::BadCounts { .. } => "BadCounts",
            ZoneError::NoMainZone => "NoMainZone",
            ZoneError::NoDependedZone => "NoDependedZone",
            ZoneError::UnlabeledZone(_) => "UnlabeledZone",
            ZoneError::WriteFailed(_) => "WriteFailed",
            ZoneError::Dataset(e) => e.kind(),
        }
    }
}

/// Generation range for one attribute, per class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeRange {
    pub name: &'static str,
    pub source_table: &'static str,
    pub main: (f64, f64),
    pub depended: (f64, f64),
    /// Whole numbers only (counts).
    pub integral: bool,
}

/// The eight zone attributes, in column order.
pub const ATTRIBUTES: [AttributeRange; 8] = [
    AttributeRange {
        name: "city_population",
        source_table: "social_status",
        main: (700_000.0, 1_100_000.0),
        depended: (5_000.0, 100_000.0),
        integral: true,
    },
    AttributeRange {
        name: "rural_population",
        source_table: "social_status",
        main: (250_000.0, 400_000.0),
        depended: (2_000.0, 40_000.0),
        integral: true,
    },
    AttributeRange {
        name: "area",
        source_table: "geo_political",
        main: (5_000.0, 8_000.0),
        depended: (200.0, 900.0),
        integral: false,
    },
    AttributeRange {
        name: "neighbor_count",
        source_table: "geo_political",
        main: (10.0, 14.0),
        depended: (1.0, 3.0),
        integral: true,
    },
    AttributeRange {
        name: "distance_to_capital",
        source_table: "geo_political",
        main: (300.0, 450.0),
        depended: (10.0, 60.0),
        integral: false,
    },
    AttributeRange {
        name: "local_employees",
        source_table: "staffs",
        main: (3_000.0, 4_500.0),
        depended: (20.0, 300.0),
        integral: true,
    },
    AttributeRange {
        name: "insured_persons",
        source_table: "clinical",
        main: (400_000.0, 600_000.0),
        depended: (1_000.0, 30_000.0),
        integral: true,
    },
    AttributeRange {
        name: "health_center_count",
        source_table: "clinical",
        main: (30.0, 45.0),
        depended: (1.0, 4.0),
        integral: true,
    },
];

/// Side length of the square map positions are drawn from.
const SCENARIO_STREAM: u64 = 0x5ce7;

pub const MAP_SIZE: f64 = 100.0;

pub fn attribute_names() -> Vec<String> {
    ATTRIBUTES.iter().map(|a| a.name.to_string()).collect()
}

/// Selection of the eight attributes plus the label column.
pub fn default_selection() -> SchemaSelection {
    SchemaSelection::new(attribute_names()).with_label(LABEL_COLUMN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneRecord {
    pub zone_id: String,
    pub position: (f64, f64),
    pub city_population: f64,
    pub rural_population: f64,
    pub area: f64,
    pub neighbor_count: u32,
    pub distance_to_capital: f64,
    pub local_employees: f64,
    pub insured_persons: f64,
    pub health_center_count: f64,
    pub label: Option<Class>,
}

impl ZoneRecord {
    /// Attribute values in [`ATTRIBUTES`] order.
    pub fn attributes(&self) -> [f64; 8] {
        [
            self.city_population,
            self.rural_population,
            self.area,
            f64::from(self.neighbor_count),
            self.distance_to_capital,
            self.local_employees,
            self.insured_persons,
            self.health_center_count,
        ]
    }

    fn from_attributes(zone_id: String, position: (f64, f64), v: [f64; 8], label: Option<Class>) -> Self {
        ZoneRecord {
            zone_id,
            position,
            city_population: v[0],
            rural_population: v[1],
            area: v[2],
            neighbor_count: v[3] as u32,
            distance_to_capital: v[4],
            local_employees: v[5],
            insured_persons: v[6],
            health_center_count: v[7],
            label,
        }
    }
}

/// A generated case study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub k_main: usize,
    pub zones: Vec<ZoneRecord>,
}

fn zone_id(i: usize, n: usize) -> String {
    let width = n.to_string().len().max(3);
    format!("z{:0width$}", i + 1)
}

/// Rounds to `scale` steps per unit (100 keeps two decimals).
fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

/// Draws `n` zones of which exactly `k_main` are main zones.
pub fn generate_zones(n: usize, k_main: usize, seed: u64) -> Result<Scenario, ZoneError> {
    if k_main == 0 || k_main >= n {
        return Err(ZoneError::BadCounts { n, k_main });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep the main-zone shuffle independent of a split drawn from the same seed
    rng.set_stream(SCENARIO_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut is_main = vec![false; n];
    for &i in &order[..k_main] {
        is_main[i] = true;
    }

    let zones = (0..n)
        .map(|i| {
            let x = round_to(rng.gen_range(0.0..MAP_SIZE), 100.0);
            let y = round_to(rng.gen_range(0.0..MAP_SIZE), 100.0);
            let mut values = [0.0; 8];
            for (v, spec) in values.iter_mut().zip(ATTRIBUTES.iter()) {
                let (lo, hi) = if is_main[i] { spec.main } else { spec.depended };
                *v = if spec.integral {
                    rng.gen_range(lo as u64..=hi as u64) as f64
                } else {
                    round_to(rng.gen_range(lo..hi), 10.0).clamp(lo, hi)
                };
            }
            let label = if is_main[i] { Class::One } else { Class::Two };
            ZoneRecord::from_attributes(zone_id(i, n), (x, y), values, Some(label))
        })
        .collect();
    Ok(Scenario { seed, k_main, zones })
}

impl Scenario {
    /// The eight attributes as a dataset tagged with their source tables.
    pub fn to_dataset(&self) -> Result<Dataset, DatasetError> {
        Dataset::new(
            ATTRIBUTES
                .iter()
                .map(|a| AttributeSpec::numeric(a.name, a.source_table))
                .collect(),
            self.zones.iter().map(|z| z.zone_id.clone()).collect(),
            self.zones.iter().map(|z| z.attributes().to_vec()).collect(),
            self.zones.iter().map(|z| z.label).collect(),
        )
    }

    /// One dataset per source table, keyed by zone id.
    pub fn source_tables(&self) -> Result<Vec<(String, Dataset)>, DatasetError> {
        let full = self.to_dataset()?;
        let mut tables: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for a in &ATTRIBUTES {
            tables.entry(a.source_table).or_default().push(a.name.to_string());
        }
        tables
            .into_iter()
            .map(|(tag, cols)| {
                let mut ds = full.select(&cols)?;
                if tag != "clinical" {
                    ds = ds.without_labels();
                }
                Ok((tag.to_string(), ds))
            })
            .collect()
    }

    /// Scenario file text: comment header, then `id,x,y,<attributes>,label`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# synthetic clinical-zone scenario\n");
        out.push_str(&format!(
            "# seed: {}\n# zones: {}\n# main zones: {}\n# map: [0, {MAP_SIZE}) x [0, {MAP_SIZE})\n",
            self.seed,
            self.zones.len(),
            self.k_main
        ));
        for a in &ATTRIBUTES {
            out.push_str(&format!(
                "# range {}: main [{}, {}], depended [{}, {}]\n",
                a.name, a.main.0, a.main.1, a.depended.0, a.depended.1
            ));
        }
        let sources: Vec<String> = ATTRIBUTES
            .iter()
            .map(|a| format!("{}={}", a.name, a.source_table))
            .collect();
        out.push_str(&format!("# sources: {}\n", sources.join(",")));

        out.push_str(&format!("{ID_COLUMN},x,y"));
        for a in &ATTRIBUTES {
            out.push(',');
            out.push_str(a.name);
        }
        out.push_str(&format!(",{LABEL_COLUMN}\n"));
        for z in &self.zones {
            out.push_str(&format!("{},{},{}", z.zone_id, z.position.0, z.position.1));
            for v in z.attributes() {
                out.push_str(&format!(",{v}"));
            }
            let label = z.label.map(|c| c.to_string()).unwrap_or_default();
            out.push_str(&format!(",{label}\n"));
        }
        out
    }
}

/// Writes the scenario file.
pub fn export_scenario(scenario: &Scenario, path: &Path) -> Result<(), ZoneError> {
    fs::write(path, scenario.to_csv_string())
        .map_err(|e| ZoneError::WriteFailed(format!("{}: {e}", path.display())))
}

/// A zone id with its map position.
pub type ZonePosition = (String, (f64, f64));

/// Reads zone positions back from a scenario file, sorted by zone id.
pub fn read_positions(path: &Path) -> Result<Vec<ZonePosition>, ZoneError> {
    let ds = dataset::ingest_csv(path, &SchemaSelection::new(["x", "y"]))?;
    Ok(ds
        .instance_ids()
        .iter()
        .zip(ds.rows())
        .map(|(id, r)| (id.clone(), (r[0], r[1])))
        .collect())
}

/// Hospital chart type attached to each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartType {
    /// Big hospital with complex organization, for main zones.
    A,
    /// Health center with simple organization, for depended zones.
    B,
}

impl ChartType {
    pub fn for_class(class: Class) -> ChartType {
        match class {
            Class::One => ChartType::A,
            Class::Two => ChartType::B,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ChartType::A => "big hospital with complex organization",
            ChartType::B => "health center with simple organization",
        }
    }

    pub fn parse(s: &str) -> Option<ChartType> {
        match s {
            "A" => Some(ChartType::A),
            "B" => Some(ChartType::B),
            _ => None,
        }
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChartType::A => "A",
            ChartType::B => "B",
        })
    }
}

/// A zone reduced to what coverage planning needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: String,
    pub position: (f64, f64),
    pub class: Class,
}

impl Site {
    pub fn from_zone(zone: &ZoneRecord) -> Result<Site, ZoneError> {
        Ok(Site {
            id: zone.zone_id.clone(),
            position: zone.position,
            class: zone.label.ok_or_else(|| ZoneError::UnlabeledZone(zone.zone_id.clone()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoveragePlan {
    /// Depended zone id to the main zone serving it.
    pub assignments: BTreeMap<String, String>,
    pub chart: BTreeMap<String, ChartType>,
}

fn squared_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Assigns every depended zone to its nearest main zone (Euclidean; ties go
/// to the lower zone id) and gives each zone its chart type.
pub fn plan_coverage(sites: &[Site]) -> Result<CoveragePlan, ZoneError> {
    let mut mains: Vec<&Site> = sites.iter().filter(|s| s.class == Class::One).collect();
    if mains.is_empty() {
        return Err(ZoneError::NoMainZone);
    }
    if mains.len() == sites.len() {
        return Err(ZoneError::NoDependedZone);
    }
    mains.sort_by(|a, b| a.id.cmp(&b.id));

    let mut plan = CoveragePlan::default();
    for site in sites {
        plan.chart.insert(site.id.clone(), ChartType::for_class(site.class));
        if site.class == Class::Two {
            let mut best = mains[0];
            let mut best_d = squared_distance(site.position, best.position);
            for &m in &mains[1..] {
                let d = squared_distance(site.position, m.position);
                if d < best_d {
                    best = m;
                    best_d = d;
                }
            }
            plan.assignments.insert(site.id.clone(), best.id.clone());
        }
    }
    Ok(plan)
}

/// Coverage over the scenario's own labels.
pub fn plan_zone_coverage(zones: &[ZoneRecord]) -> Result<CoveragePlan, ZoneError> {
    let sites = zones.iter().map(Site::from_zone).collect::<Result<Vec<_>, _>>()?;
    plan_coverage(&sites)
}

/// Text rendering: `zone\tchart\tserved_by` per zone in id order.
pub fn coverage_to_text(plan: &CoveragePlan) -> String {
    let mut out = String::from("zone\tchart\tserved_by\n");
    for (id, chart) in &plan.chart {
        let served = plan.assignments.get(id).map_or("-", String::as_str);
        out.push_str(&format!("{id}\t{chart}\t{served}\n"));
    }
    out
}
