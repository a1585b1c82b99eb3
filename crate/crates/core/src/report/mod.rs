//! Decoding of a solved plan into operational records: dispatches,
//! inventory profiles, plant timelines, trip statistics and costs.

mod check;
mod output;

pub use check::{demand_violations, resimulate_inventories, DemandViolation};
pub use output::{read_solution, render_gantt, write_comparison, write_outputs, write_solution};

use crate::model::{delivery_links, raw_links, MilpModel, VarId};
use crate::scenario::{InventoryKind, Scenario};
use hydroplan_milp::MilpResult;
use std::collections::BTreeMap;
use thiserror::Error;

/// Volumes at or below this many kL are treated as zero.
pub const VOLUME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("the solve produced no incumbent")]
    MissingIncumbent,
    #[error("solution has {found} values, model has {expected} columns")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{vehicle}/{product}: {trips} trips dispatched but no vehicles available or hired")]
    ZeroFleet {
        vehicle: String,
        product: String,
        trips: u64,
    },
    #[error("plans do not describe the same entities: {0}")]
    EntityMismatch(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DispatchKind {
    /// Final product from a source to a consumer cluster.
    Delivery,
    /// Raw water from a source to a treatment facility.
    RawSupply,
}

impl DispatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DispatchKind::Delivery => "delivery",
            DispatchKind::RawSupply => "raw",
        }
    }
}

/// Hours spent in each leg of one round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripLegs {
    pub filling: f64,
    pub outbound: f64,
    /// Disinfection and distribution at the consumer; zero for raw runs.
    pub service: f64,
    pub inbound: f64,
}

impl TripLegs {
    pub fn total(&self) -> f64 {
        self.filling + self.outbound + self.service + self.inbound
    }
}

/// Volume leaving a source in one period with one vehicle class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub period: usize,
    pub kind: DispatchKind,
    pub from: String,
    /// Consumer cluster for deliveries, treatment facility for raw runs.
    pub to: String,
    /// Region whose tanker pool serves the trip.
    pub region: String,
    pub product: String,
    pub vehicle: String,
    pub vehicle_capacity: f64,
    pub kl: f64,
    /// Period in which the load counts at its destination.
    pub arrival: usize,
    /// Periods until the tanker capacity is back in its pool.
    pub rtt_periods: usize,
    pub legs: TripLegs,
    pub cost_per_kl: f64,
}

impl Dispatch {
    /// Tanker loads needed for this record.
    pub fn trips(&self) -> u64 {
        (self.kl / self.vehicle_capacity - 1e-9).ceil().max(0.0) as u64
    }
}

/// Hourly level of one inventory with its limits and soft-limit deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct InventorySeries {
    pub facility: String,
    pub kind: InventoryKind,
    pub product: String,
    pub cap_min: f64,
    pub cap_max: f64,
    pub buffer: Option<f64>,
    pub initial: f64,
    /// Level at the end of each period; index 0 is period 1.
    pub levels: Vec<f64>,
    /// Target level per period, 0 where none applies.
    pub targets: Vec<f64>,
    pub buffer_shortfall: Vec<f64>,
    pub target_shortfall: Vec<f64>,
    pub target_excess: Vec<f64>,
    pub buffer_penalty: f64,
    pub target_penalty: f64,
    /// Rate charged on level above target; zero unless enabled at build.
    pub excess_penalty: f64,
}

/// Output of one final product at a facility.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOutput {
    pub product: String,
    /// Treated output per unit of raw water drawn.
    pub recovery: f64,
    /// kL produced per period; index 0 is period 1.
    pub kl: Vec<f64>,
}

/// On/off timeline of a treatment facility.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantTimeline {
    pub facility: String,
    pub on: Vec<bool>,
    pub forced_off: Vec<bool>,
    pub output: Vec<ProductOutput>,
}

impl PlantTimeline {
    /// `1`/`0` per period.
    pub fn bitstring(&self) -> String {
        self.on.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// One source's part of a day's deliveries of a product, by arrival day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyShare {
    pub day: usize,
    pub product: String,
    pub source: String,
    pub kl: f64,
    /// Fraction of the day's delivered total for the product.
    pub share: f64,
}

/// Tanker pool of one region, vehicle class and product.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetUse {
    pub region: String,
    pub vehicle: String,
    pub product: String,
    pub capacity: f64,
    pub available: u32,
    pub hired_kl: f64,
    /// Hired tankers, rounded up.
    pub hired: u32,
    pub hire_cost: f64,
}

/// Cost component keys and labels, in reporting order.
pub const COST_COMPONENTS: [(&str, &str); 5] = [
    ("distribution", "Source to consumer supply"),
    ("raw_supply", "Raw water supply to treatment facilities"),
    ("buffer_penalty", "Buffer capacity violation penalty"),
    ("target_penalty", "Target capacity violation penalty"),
    ("hire_penalty", "Extra tanker penalty"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// Values in [`COST_COMPONENTS`] order.
    pub components: [f64; 5],
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.components.iter().sum()
    }
}

/// Everything a solved plan says about operations.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub nt: usize,
    /// Objective value of the decoded solution vector.
    pub objective: f64,
    pub dispatches: Vec<Dispatch>,
    pub inventories: Vec<InventorySeries>,
    pub plants: Vec<PlantTimeline>,
    pub shares: Vec<DailyShare>,
    pub fleets: Vec<FleetUse>,
}

/// Decodes the incumbent of a solve.
pub fn extract(
    sc: &Scenario,
    model: &MilpModel,
    result: &MilpResult,
) -> Result<PlanReport, ReportError> {
    let x = result.x.as_ref().ok_or(ReportError::MissingIncumbent)?;
    extract_values(sc, model, x)
}

/// Decodes a full solution vector of `model`.
pub fn extract_values(
    sc: &Scenario,
    model: &MilpModel,
    x: &[f64],
) -> Result<PlanReport, ReportError> {
    if x.len() != model.num_cols() {
        return Err(ReportError::LengthMismatch {
            expected: model.num_cols(),
            found: x.len(),
        });
    }
    let nt = sc.nt();
    let val = |id: VarId| model.value(x, &id);

    let mut dispatches = Vec::new();
    for d in delivery_links(sc) {
        for lv in &d.vehicles {
            let travel = sc.travel_to_consumer(d.s, d.c, d.p, lv.v).unwrap_or(0.0);
            let legs = TripLegs {
                filling: sc.prep_time(d.s, lv.v),
                outbound: travel,
                service: sc.disinfection_time(d.s, lv.v) + sc.consumers[d.c].distribution_time,
                inbound: travel,
            };
            for t in 1..=nt {
                let kl = val(VarId::XPDl {
                    s: d.s,
                    c: d.c,
                    p: d.p,
                    v: lv.v,
                    t,
                });
                if kl > VOLUME_EPS {
                    dispatches.push(Dispatch {
                        period: t,
                        kind: DispatchKind::Delivery,
                        from: sc.sources[d.s].id.clone(),
                        to: sc.consumers[d.c].id.clone(),
                        region: sc.regions[sc.sources[d.s].region].clone(),
                        product: sc.products[d.p].id.clone(),
                        vehicle: sc.vehicles[lv.v].id.clone(),
                        vehicle_capacity: sc.vehicles[lv.v].capacity,
                        kl,
                        arrival: t + d.transit,
                        rtt_periods: lv.rtt_periods,
                        legs,
                        cost_per_kl: sc.distribution_cost(d.s, d.c, d.p, lv.v),
                    });
                }
            }
        }
    }
    for l in raw_links(sc) {
        for lv in &l.vehicles {
            let travel = sc.travel_to_source(l.s, l.s2, l.p, lv.v).unwrap_or(0.0);
            let legs = TripLegs {
                filling: sc.prep_time(l.s, lv.v),
                outbound: travel,
                service: 0.0,
                inbound: travel,
            };
            for t in 1..=nt {
                let kl = val(VarId::XRw {
                    s: l.s,
                    s2: l.s2,
                    p: l.p,
                    v: lv.v,
                    t,
                });
                if kl > VOLUME_EPS {
                    dispatches.push(Dispatch {
                        period: t,
                        kind: DispatchKind::RawSupply,
                        from: sc.sources[l.s].id.clone(),
                        to: sc.sources[l.s2].id.clone(),
                        region: sc.regions[sc.sources[l.s].region].clone(),
                        product: sc.products[l.p].id.clone(),
                        vehicle: sc.vehicles[lv.v].id.clone(),
                        vehicle_capacity: sc.vehicles[lv.v].capacity,
                        kl,
                        arrival: t + l.transit,
                        rtt_periods: lv.rtt_periods,
                        legs,
                        cost_per_kl: sc.raw_supply_cost(l.s, l.s2, l.p, lv.v),
                    });
                }
            }
        }
    }
    dispatches.sort_by(|a, b| {
        (a.period, a.kind, &a.from, &a.to, &a.product, &a.vehicle)
            .cmp(&(b.period, b.kind, &b.from, &b.to, &b.product, &b.vehicle))
    });

    let mut inventories = Vec::new();
    for (i, inv) in sc.inventories.iter().enumerate() {
        if model.col(&VarId::XQ { i, t: 1 }).is_none() {
            continue;
        }
        let series =
            |f: &dyn Fn(usize) -> VarId| -> Vec<f64> { (1..=nt).map(|t| val(f(t))).collect() };
        inventories.push(InventorySeries {
            facility: sc.sources[inv.owner].id.clone(),
            kind: inv.kind,
            product: sc.products[inv.product].id.clone(),
            cap_min: inv.cap_min,
            cap_max: inv.cap_max,
            buffer: inv.cap_buffer,
            initial: inv.initial_qty,
            levels: series(&|t| VarId::XQ { i, t }),
            targets: (1..=nt).map(|t| inv.target_at(t)).collect(),
            buffer_shortfall: series(&|t| VarId::XBCV { i, t }),
            target_shortfall: series(&|t| VarId::XTVMinus { i, t }),
            target_excess: series(&|t| VarId::XTVPlus { i, t }),
            buffer_penalty: inv.buffer_penalty,
            target_penalty: inv.target_penalty,
            excess_penalty: if model.options.penalize_target_excess {
                inv.target_penalty
            } else {
                0.0
            },
        });
    }

    let mut plants = Vec::new();
    for s in sc.treatment_facilities() {
        let src = &sc.sources[s];
        let mut products: Vec<usize> = src
            .products
            .iter()
            .copied()
            .filter(|&p| sc.is_final(p))
            .collect();
        products.sort_unstable();
        products.dedup();
        let output = products
            .into_iter()
            .filter(|&p| model.col(&VarId::YPSl { s, p, t: 1 }).is_some())
            .map(|p| ProductOutput {
                product: sc.products[p].id.clone(),
                recovery: sc.recovery(s, p),
                kl: (1..=nt)
                    .map(|t| val(VarId::YPSl { s, p, t }) * src.throughput)
                    .collect(),
            })
            .collect();
        plants.push(PlantTimeline {
            facility: src.id.clone(),
            on: (1..=nt).map(|t| val(VarId::YOp { s, t }) > 0.5).collect(),
            forced_off: (1..=nt).map(|t| sc.forced_off(s, t)).collect(),
            output,
        });
    }

    let mut fleets = Vec::new();
    for id in &model.vars {
        if let VarId::XVExQ { r, v, p } = *id {
            let capacity = sc.vehicles[v].capacity;
            let hired_kl = val(*id).max(0.0);
            fleets.push(FleetUse {
                region: sc.regions[r].clone(),
                vehicle: sc.vehicles[v].id.clone(),
                product: sc.products[p].id.clone(),
                capacity,
                available: sc.va(r, v, p),
                hired_kl,
                hired: (hired_kl / capacity - 1e-6).ceil().max(0.0) as u32,
                hire_cost: sc.hire_cost(v, p).unwrap_or(0.0),
            });
        }
    }

    let shares = daily_shares(&dispatches, nt);
    Ok(PlanReport {
        nt,
        objective: model.lp().objective_value(x),
        dispatches,
        inventories,
        plants,
        shares,
        fleets,
    })
}

/// Delivered volume per (day, product, source) by arrival period, with each
/// source's fraction of the day's total.
fn daily_shares(dispatches: &[Dispatch], nt: usize) -> Vec<DailyShare> {
    let mut kl: BTreeMap<(usize, &str, &str), f64> = BTreeMap::new();
    for d in dispatches {
        if d.kind != DispatchKind::Delivery || d.arrival > nt {
            continue;
        }
        let day = (d.arrival - 1) / 24 + 1;
        *kl.entry((day, d.product.as_str(), d.from.as_str()))
            .or_default() += d.kl;
    }
    let mut totals: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for (&(day, p, _), &v) in &kl {
        *totals.entry((day, p)).or_default() += v;
    }
    kl.iter()
        .map(|(&(day, p, s), &v)| DailyShare {
            day,
            product: p.to_string(),
            source: s.to_string(),
            kl: v,
            share: v / totals[&(day, p)],
        })
        .collect()
}

/// The five objective terms recomputed from the report's records.
pub fn cost_breakdown(report: &PlanReport) -> CostBreakdown {
    let mut c = [0.0; 5];
    for d in &report.dispatches {
        let k = match d.kind {
            DispatchKind::Delivery => 0,
            DispatchKind::RawSupply => 1,
        };
        c[k] += d.cost_per_kl * d.kl;
    }
    for inv in &report.inventories {
        c[2] += inv.buffer_penalty * inv.buffer_shortfall.iter().sum::<f64>();
        c[3] += inv.target_penalty * inv.target_shortfall.iter().sum::<f64>();
        c[3] += inv.excess_penalty * inv.target_excess.iter().sum::<f64>();
    }
    for f in &report.fleets {
        c[4] += f.hire_cost / f.capacity * f.hired_kl;
    }
    CostBreakdown { components: c }
}

/// How a class's trips spread over its vehicles: `high_vehicles` make
/// `high_trips` trips each, the rest make one fewer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripSplit {
    pub high_vehicles: u64,
    pub high_trips: u64,
    pub low_vehicles: u64,
    pub low_trips: u64,
}

/// Splits a mean trip count over `vehicles` whole vehicles. The fractional
/// part of the mean times the fleet size, rounded to the nearest vehicle,
/// make one extra trip.
pub fn split_trips(vehicles: u64, mean: f64) -> TripSplit {
    let low = mean.floor();
    let frac = mean - low;
    let high_vehicles = ((vehicles as f64 * frac).round() as u64).min(vehicles);
    TripSplit {
        high_vehicles,
        high_trips: low as u64 + 1,
        low_vehicles: vehicles - high_vehicles,
        low_trips: low as u64,
    }
}

/// Trip totals of one vehicle class and product over all regions.
#[derive(Debug, Clone, PartialEq)]
pub struct TripStats {
    pub vehicle: String,
    pub product: String,
    pub available: u64,
    pub hired: u64,
    pub total_trips: u64,
    /// Trips per vehicle, available plus hired.
    pub mean_trips: f64,
    pub split: TripSplit,
}

/// Per (vehicle class, product) trip table, in name order.
pub fn trip_stats(report: &PlanReport) -> Result<Vec<TripStats>, ReportError> {
    let mut fleet: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
    for f in &report.fleets {
        let e = fleet
            .entry((f.vehicle.as_str(), f.product.as_str()))
            .or_default();
        e.0 += f.available as u64;
        e.1 += f.hired as u64;
    }
    let mut trips: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for d in &report.dispatches {
        *trips
            .entry((d.vehicle.as_str(), d.product.as_str()))
            .or_default() += d.trips();
    }
    for &k in trips.keys() {
        fleet.entry(k).or_default();
    }
    let mut out = Vec::new();
    for ((v, p), (available, hired)) in fleet {
        let total = trips.get(&(v, p)).copied().unwrap_or(0);
        let n = available + hired;
        if n == 0 && total > 0 {
            return Err(ReportError::ZeroFleet {
                vehicle: v.to_string(),
                product: p.to_string(),
                trips: total,
            });
        }
        let mean = if n == 0 { 0.0 } else { total as f64 / n as f64 };
        out.push(TripStats {
            vehicle: v.to_string(),
            product: p.to_string(),
            available,
            hired,
            total_trips: total,
            mean_trips: mean,
            split: split_trips(n, mean),
        });
    }
    Ok(out)
}

/// Cost change of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDelta {
    pub key: &'static str,
    pub base: f64,
    pub variant: f64,
    pub delta: f64,
}

/// Per-facility differences between two plant timelines.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineDiff {
    pub facility: String,
    /// Periods whose on/off state differs.
    pub changed: Vec<usize>,
    /// Periods forced off in the variant but not in the base.
    pub newly_forced_off: Vec<usize>,
}

/// Change of one source's daily share.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareDelta {
    pub day: usize,
    pub product: String,
    pub source: String,
    pub delta: f64,
}

/// Two plans of the same network side by side, variant minus base.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioComparison {
    pub base: PlanReport,
    pub variant: PlanReport,
    /// Five components then the total.
    pub costs: Vec<CostDelta>,
    pub timelines: Vec<TimelineDiff>,
    pub shares: Vec<ShareDelta>,
}

/// Compares a base plan with a variant of the same network.
pub fn compare(base: &PlanReport, variant: &PlanReport) -> Result<ScenarioComparison, ReportError> {
    if base.nt != variant.nt {
        return Err(ReportError::EntityMismatch(format!(
            "horizons {} and {}",
            base.nt, variant.nt
        )));
    }
    let plant_ids = |r: &PlanReport| {
        r.plants
            .iter()
            .map(|p| p.facility.clone())
            .collect::<Vec<_>>()
    };
    if plant_ids(base) != plant_ids(variant) {
        return Err(ReportError::EntityMismatch(
            "treatment facilities differ".into(),
        ));
    }
    let inv_ids = |r: &PlanReport| {
        r.inventories
            .iter()
            .map(|i| (i.facility.clone(), i.kind, i.product.clone()))
            .collect::<Vec<_>>()
    };
    if inv_ids(base) != inv_ids(variant) {
        return Err(ReportError::EntityMismatch("inventories differ".into()));
    }
    let fleet_ids = |r: &PlanReport| {
        r.fleets
            .iter()
            .map(|f| (f.region.clone(), f.vehicle.clone(), f.product.clone()))
            .collect::<Vec<_>>()
    };
    if fleet_ids(base) != fleet_ids(variant) {
        return Err(ReportError::EntityMismatch("tanker pools differ".into()));
    }

    let cb = cost_breakdown(base);
    let cv = cost_breakdown(variant);
    let mut costs: Vec<CostDelta> = COST_COMPONENTS
        .iter()
        .enumerate()
        .map(|(k, &(key, _))| CostDelta {
            key,
            base: cb.components[k],
            variant: cv.components[k],
            delta: cv.components[k] - cb.components[k],
        })
        .collect();
    costs.push(CostDelta {
        key: "total",
        base: cb.total(),
        variant: cv.total(),
        delta: cv.total() - cb.total(),
    });

    let timelines = base
        .plants
        .iter()
        .zip(&variant.plants)
        .map(|(b, v)| TimelineDiff {
            facility: b.facility.clone(),
            changed: (0..base.nt)
                .filter(|&k| b.on[k] != v.on[k])
                .map(|k| k + 1)
                .collect(),
            newly_forced_off: (0..base.nt)
                .filter(|&k| v.forced_off[k] && !b.forced_off[k])
                .map(|k| k + 1)
                .collect(),
        })
        .collect();

    let mut share_map: BTreeMap<(usize, String, String), (f64, f64)> = BTreeMap::new();
    for s in &base.shares {
        share_map
            .entry((s.day, s.product.clone(), s.source.clone()))
            .or_default()
            .0 = s.share;
    }
    for s in &variant.shares {
        share_map
            .entry((s.day, s.product.clone(), s.source.clone()))
            .or_default()
            .1 = s.share;
    }
    let shares = share_map
        .into_iter()
        .map(|((day, product, source), (b, v))| ShareDelta {
            day,
            product,
            source,
            delta: v - b,
        })
        .collect();

    Ok(ScenarioComparison {
        base: base.clone(),
        variant: variant.clone(),
        costs,
        timelines,
        shares,
    })
}
