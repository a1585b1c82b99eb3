//! Problem instances: entities, suitability relations, link times, costs and
//! demands over an hourly horizon.
//!
//! A [`Scenario`] is built from the TOML file format in [`file`], which
//! resolves every id to an index. Periods are 1-based throughout.

mod file;
mod validate;

pub use file::{
    parse_scenario, parse_str, ConsumerFile, CostEntryFile, CostsFile, DemandFile, HorizonFile,
    InventoryFile, OverrideFile, ProductsFile, RegionsFile, ScenarioFile, SourceFile,
    SourceTimeFile, SupplyFile, TargetFile, TimesFile, TravelFile, VehicleAvailabilityFile,
    VehicleFile,
};
pub use validate::{validate, Severity, Violation};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type ProductIdx = usize;
pub type RegionIdx = usize;
pub type SourceIdx = usize;
pub type InventoryIdx = usize;
pub type ConsumerIdx = usize;
pub type VehicleIdx = usize;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown entity reference: {kind} '{id}' in {context}")]
    UnknownReference {
        kind: &'static str,
        id: String,
        context: String,
    },
    #[error("duplicate id: {kind} '{id}'")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid id '{0}': ids may contain only letters, digits, '-' and '.'")]
    InvalidId(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductKind {
    Raw,
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub id: String,
    pub kind: ProductKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceType {
    /// Freshwater: supplies final products directly, after disinfection.
    FW,
    /// Groundwater: supplies raw water to treatment facilities.
    GW,
    /// Treatment facility: turns raw water into final products.
    TF,
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceType::FW => "FW",
            SourceType::GW => "GW",
            SourceType::TF => "TF",
        })
    }
}

/// Raw-water link from a source to a treatment facility.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyLink {
    pub to: SourceIdx,
    /// Vehicle classes allowed on the link.
    pub vehicles: Vec<VehicleIdx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub id: String,
    pub source_type: SourceType,
    pub region: RegionIdx,
    /// Treatment throughput in kL/h (treatment facilities only).
    pub throughput: f64,
    /// Extraction limit in kL/h per receiving facility; 0 means unlimited.
    pub extraction_limit: f64,
    pub min_uptime: usize,
    pub min_downtime: usize,
    pub initial_on: bool,
    /// Treated output per unit of raw input, per final product.
    pub recovery: BTreeMap<ProductIdx, f64>,
    /// Products the source can supply.
    pub products: Vec<ProductIdx>,
    /// Consumers the source can serve.
    pub consumers: Vec<ConsumerIdx>,
    pub supplies: Vec<SupplyLink>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InventoryKind {
    /// Raw-water inventory.
    RWI,
    /// Treated-water inventory.
    TWI,
}

impl fmt::Display for InventoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InventoryKind::RWI => "RWI",
            InventoryKind::TWI => "TWI",
        })
    }
}

/// Inventory level target over an inclusive period range.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpan {
    pub from: usize,
    pub to: usize,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inventory {
    pub owner: SourceIdx,
    pub kind: InventoryKind,
    pub product: ProductIdx,
    pub cap_min: f64,
    pub cap_max: f64,
    pub cap_buffer: Option<f64>,
    pub initial_qty: f64,
    pub target: Vec<TargetSpan>,
    /// Cost per kL below target per period.
    pub target_penalty: f64,
    /// Cost per kL below buffer per period.
    pub buffer_penalty: f64,
}

impl Inventory {
    /// Target level at period `t`, 0 when none applies. Later spans win.
    pub fn target_at(&self, t: usize) -> f64 {
        self.target
            .iter()
            .rev()
            .find(|s| s.from <= t && t <= s.to)
            .map_or(0.0, |s| s.kl)
    }
}

/// Per-period delivery bounds in kL.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DemandBound {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerCluster {
    pub id: String,
    pub region: RegionIdx,
    /// Informational tag such as HHC, CC or HC.
    pub kind: String,
    /// Hours spent distributing at the cluster.
    pub distribution_time: f64,
    /// Vehicle classes able to deliver to the cluster.
    pub vehicles: Vec<VehicleIdx>,
    /// Per-product replacement of `vehicles`.
    pub vehicles_by_product: BTreeMap<ProductIdx, Vec<VehicleIdx>>,
    /// Delivery bounds keyed by (product, period).
    pub demand: BTreeMap<(ProductIdx, usize), DemandBound>,
}

impl ConsumerCluster {
    pub fn vehicles_for(&self, p: ProductIdx) -> &[VehicleIdx] {
        self.vehicles_by_product
            .get(&p)
            .map_or(&self.vehicles[..], |v| &v[..])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleClass {
    pub id: String,
    /// Tank capacity in kL.
    pub capacity: f64,
    /// Fleet size per (region, product). A present key means the class may
    /// carry the product from that region, even with zero vehicles.
    pub availability: BTreeMap<(RegionIdx, ProductIdx), u32>,
    /// Cost per hired vehicle by product; absent products cannot hire.
    pub hire_cost: BTreeMap<ProductIdx, f64>,
}

/// Where a travel time or cost entry leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Consumer(ConsumerIdx),
    Source(SourceIdx),
}

/// A link attribute (hours or cost); `None` product or vehicle matches all.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEntry {
    pub from: SourceIdx,
    pub to: Endpoint,
    pub product: Option<ProductIdx>,
    pub vehicle: Option<VehicleIdx>,
    pub value: f64,
}

/// A per-source attribute in hours; `None` vehicle matches all.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEntry {
    pub source: SourceIdx,
    pub vehicle: Option<VehicleIdx>,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkTimes {
    pub travel: Vec<LinkEntry>,
    pub prep: Vec<SourceEntry>,
    pub disinfection: Vec<SourceEntry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostTable {
    /// Cost per kL delivered to consumers.
    pub distribution: Vec<LinkEntry>,
    /// Cost per kL of raw water moved to treatment facilities.
    pub raw_supply: Vec<LinkEntry>,
}

/// A period range during which a treatment facility must be off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaintenanceOverride {
    pub source: SourceIdx,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    pub nt: usize,
    pub demand_start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub horizon: Horizon,
    pub products: Vec<Product>,
    pub regions: Vec<String>,
    pub sources: Vec<Source>,
    pub inventories: Vec<Inventory>,
    pub consumers: Vec<ConsumerCluster>,
    pub vehicles: Vec<VehicleClass>,
    pub times: LinkTimes,
    pub costs: CostTable,
    pub overrides: Vec<MaintenanceOverride>,
}

/// Rounds a nonnegative duration in hours up to whole periods, ignoring
/// floating-point noise just above an integer.
pub fn ceil_hours(h: f64) -> usize {
    (h - 1e-9).ceil().max(0.0) as usize
}

fn best_match(
    entries: &[LinkEntry],
    from: SourceIdx,
    to: Endpoint,
    p: ProductIdx,
    v: VehicleIdx,
) -> Option<&LinkEntry> {
    let mut best: Option<(u8, &LinkEntry)> = None;
    for e in entries {
        if e.from != from || e.to != to {
            continue;
        }
        if e.product.is_some_and(|q| q != p) || e.vehicle.is_some_and(|w| w != v) {
            continue;
        }
        let score = e.product.is_some() as u8 + e.vehicle.is_some() as u8;
        if best.is_none_or(|(b, _)| score >= b) {
            best = Some((score, e));
        }
    }
    best.map(|(_, e)| e)
}

fn source_hours(entries: &[SourceEntry], s: SourceIdx, v: VehicleIdx) -> f64 {
    let mut best: Option<(bool, f64)> = None;
    for e in entries {
        if e.source != s || e.vehicle.is_some_and(|w| w != v) {
            continue;
        }
        let specific = e.vehicle.is_some();
        if best.is_none_or(|(b, _)| specific >= b) {
            best = Some((specific, e.hours));
        }
    }
    best.map_or(0.0, |(_, h)| h)
}

impl Scenario {
    pub fn nt(&self) -> usize {
        self.horizon.nt
    }

    pub fn source_index(&self, id: &str) -> Option<SourceIdx> {
        self.sources.iter().position(|s| s.id == id)
    }

    pub fn consumer_index(&self, id: &str) -> Option<ConsumerIdx> {
        self.consumers.iter().position(|c| c.id == id)
    }

    pub fn product_index(&self, id: &str) -> Option<ProductIdx> {
        self.products.iter().position(|p| p.id == id)
    }

    pub fn vehicle_index(&self, id: &str) -> Option<VehicleIdx> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    pub fn region_index(&self, id: &str) -> Option<RegionIdx> {
        self.regions.iter().position(|r| r == id)
    }

    pub fn is_final(&self, p: ProductIdx) -> bool {
        self.products[p].kind == ProductKind::Final
    }

    pub fn is_raw(&self, p: ProductIdx) -> bool {
        self.products[p].kind == ProductKind::Raw
    }

    pub fn treatment_facilities(&self) -> impl Iterator<Item = SourceIdx> + '_ {
        (0..self.sources.len()).filter(|&s| self.sources[s].source_type == SourceType::TF)
    }

    /// Source can supply product (SP).
    pub fn sp(&self, s: SourceIdx, p: ProductIdx) -> bool {
        self.sources[s].products.contains(&p)
    }

    /// Source can serve consumer (SC).
    pub fn sc(&self, s: SourceIdx, c: ConsumerIdx) -> bool {
        self.sources[s].consumers.contains(&c)
    }

    /// Raw-water link from `s` to facility `s2` (SS).
    pub fn ss(&self, s: SourceIdx, s2: SourceIdx) -> Option<&SupplyLink> {
        self.sources[s].supplies.iter().find(|l| l.to == s2)
    }

    /// Inventory of `kind` for product `p` at `s` (SIP).
    pub fn inventory(
        &self,
        s: SourceIdx,
        kind: InventoryKind,
        p: ProductIdx,
    ) -> Option<InventoryIdx> {
        self.inventories
            .iter()
            .position(|i| i.owner == s && i.kind == kind && i.product == p)
    }

    /// Raw product `p` can flow from `s` to facility `s2` (SSP).
    pub fn ssp(&self, s: SourceIdx, s2: SourceIdx, p: ProductIdx) -> bool {
        self.ss(s, s2).is_some()
            && self.is_raw(p)
            && self.sp(s, p)
            && self.inventory(s2, InventoryKind::RWI, p).is_some()
    }

    /// Vehicle `v` may carry raw product `p` from `s` to `s2` (SSPV).
    pub fn sspv(&self, s: SourceIdx, s2: SourceIdx, p: ProductIdx, v: VehicleIdx) -> bool {
        self.ssp(s, s2, p) && self.ss(s, s2).is_some_and(|l| l.vehicles.contains(&v))
    }

    /// Vehicle `v` may deliver `p` to consumer `c` (CPV).
    pub fn cpv(&self, c: ConsumerIdx, p: ProductIdx, v: VehicleIdx) -> bool {
        self.consumers[c].vehicles_for(p).contains(&v)
    }

    /// Region `r` keeps a fleet of `v` for product `p` (RVP).
    pub fn rvp(&self, r: RegionIdx, v: VehicleIdx, p: ProductIdx) -> bool {
        self.vehicles[v].availability.contains_key(&(r, p))
    }

    /// Vehicles of `v` available in region `r` for product `p` (VA).
    pub fn va(&self, r: RegionIdx, v: VehicleIdx, p: ProductIdx) -> u32 {
        self.vehicles[v]
            .availability
            .get(&(r, p))
            .copied()
            .unwrap_or(0)
    }

    pub fn hire_cost(&self, v: VehicleIdx, p: ProductIdx) -> Option<f64> {
        self.vehicles[v].hire_cost.get(&p).copied()
    }

    pub fn recovery(&self, s: SourceIdx, p: ProductIdx) -> f64 {
        self.sources[s].recovery.get(&p).copied().unwrap_or(1.0)
    }

    pub fn travel_to_consumer(
        &self,
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> Option<f64> {
        best_match(&self.times.travel, s, Endpoint::Consumer(c), p, v).map(|e| e.value)
    }

    pub fn travel_to_source(
        &self,
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> Option<f64> {
        best_match(&self.times.travel, s, Endpoint::Source(s2), p, v).map(|e| e.value)
    }

    pub fn prep_time(&self, s: SourceIdx, v: VehicleIdx) -> f64 {
        source_hours(&self.times.prep, s, v)
    }

    pub fn disinfection_time(&self, s: SourceIdx, v: VehicleIdx) -> f64 {
        source_hours(&self.times.disinfection, s, v)
    }

    pub fn distribution_cost(
        &self,
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> f64 {
        best_match(&self.costs.distribution, s, Endpoint::Consumer(c), p, v)
            .map_or(0.0, |e| e.value)
    }

    pub fn raw_supply_cost(
        &self,
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> f64 {
        best_match(&self.costs.raw_supply, s, Endpoint::Source(s2), p, v).map_or(0.0, |e| e.value)
    }

    /// Vehicles that can carry `p` from `s` to consumer `c`: compatible with
    /// the consumer and fleeted in the source's region.
    pub fn delivery_vehicles(
        &self,
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
    ) -> Vec<VehicleIdx> {
        let r = self.sources[s].region;
        (0..self.vehicles.len())
            .filter(|&v| self.cpv(c, p, v) && self.rvp(r, v, p))
            .collect()
    }

    /// Vehicles that can carry raw `p` from `s` to facility `s2`.
    pub fn raw_vehicles(&self, s: SourceIdx, s2: SourceIdx, p: ProductIdx) -> Vec<VehicleIdx> {
        let r = self.sources[s].region;
        (0..self.vehicles.len())
            .filter(|&v| self.sspv(s, s2, p, v) && self.rvp(r, v, p))
            .collect()
    }

    /// Whole periods between dispatch at `s` and arrival at consumer `c`:
    /// preparation, disinfection and one-way travel, taking the slowest
    /// usable vehicle. `None` if no vehicle can make the trip.
    pub fn transit(&self, s: SourceIdx, c: ConsumerIdx, p: ProductIdx) -> Option<usize> {
        let mut worst: Option<f64> = None;
        for v in self.delivery_vehicles(s, c, p) {
            let travel = self.travel_to_consumer(s, c, p, v)?;
            let h = self.prep_time(s, v) + self.disinfection_time(s, v) + travel;
            worst = Some(worst.map_or(h, |w: f64| w.max(h)));
        }
        worst.map(ceil_hours)
    }

    /// Whole periods between dispatch of raw water at `s` and arrival at `s2`.
    pub fn raw_transit(&self, s: SourceIdx, s2: SourceIdx, p: ProductIdx) -> Option<usize> {
        let mut worst: Option<f64> = None;
        for v in self.raw_vehicles(s, s2, p) {
            let travel = self.travel_to_source(s, s2, p, v)?;
            let h = self.prep_time(s, v) + travel;
            worst = Some(worst.map_or(h, |w: f64| w.max(h)));
        }
        worst.map(ceil_hours)
    }

    /// Round trip for a consumer delivery: out and back, preparation,
    /// disinfection and distribution, in whole periods.
    pub fn round_trip(
        &self,
        s: SourceIdx,
        c: ConsumerIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> Option<usize> {
        let travel = self.travel_to_consumer(s, c, p, v)?;
        Some(ceil_hours(
            2.0 * travel
                + self.prep_time(s, v)
                + self.disinfection_time(s, v)
                + self.consumers[c].distribution_time,
        ))
    }

    /// Round trip for a raw-water run to a facility, in whole periods.
    pub fn raw_round_trip(
        &self,
        s: SourceIdx,
        s2: SourceIdx,
        p: ProductIdx,
        v: VehicleIdx,
    ) -> Option<usize> {
        let travel = self.travel_to_source(s, s2, p, v)?;
        Some(ceil_hours(2.0 * travel + self.prep_time(s, v)))
    }

    pub fn demand(&self, c: ConsumerIdx, p: ProductIdx, t: usize) -> DemandBound {
        self.consumers[c]
            .demand
            .get(&(p, t))
            .copied()
            .unwrap_or_default()
    }

    pub fn forced_off(&self, s: SourceIdx, t: usize) -> bool {
        self.overrides
            .iter()
            .any(|o| o.source == s && o.from <= t && t <= o.to)
    }

    /// Returns a copy with `ov` added to the forced-off windows. An empty
    /// range leaves the scenario unchanged.
    pub fn apply_override(&self, ov: MaintenanceOverride) -> Result<Scenario, ScenarioError> {
        let src = self
            .sources
            .get(ov.source)
            .ok_or_else(|| ScenarioError::InvalidOverride(format!("no source #{}", ov.source)))?;
        if src.source_type != SourceType::TF {
            return Err(ScenarioError::InvalidOverride(format!(
                "{} is not a treatment facility",
                src.id
            )));
        }
        let mut out = self.clone();
        if ov.from > ov.to {
            return Ok(out);
        }
        if ov.from < 1 || ov.to > self.horizon.nt {
            return Err(ScenarioError::InvalidOverride(format!(
                "range {}-{} outside horizon 1-{}",
                ov.from, ov.to, self.horizon.nt
            )));
        }
        out.overrides.push(ov);
        Ok(out)
    }

    /// Parses `SOURCE:from-to` (inclusive hours) against this scenario.
    pub fn parse_override(&self, spec: &str) -> Result<MaintenanceOverride, ScenarioError> {
        let bad = || ScenarioError::InvalidOverride(format!("'{spec}': expected SOURCE:from-to"));
        let (id, range) = spec.split_once(':').ok_or_else(bad)?;
        let (a, b) = range.split_once('-').ok_or_else(bad)?;
        let from: usize = a.trim().parse().map_err(|_| bad())?;
        let to: usize = b.trim().parse().map_err(|_| bad())?;
        let source =
            self.source_index(id.trim())
                .ok_or_else(|| ScenarioError::UnknownReference {
                    kind: "source",
                    id: id.trim().to_string(),
                    context: "override".to_string(),
                })?;
        Ok(MaintenanceOverride { source, from, to })
    }
}
