//! TOML scenario format: serde mirror types, id resolution and the
//! canonical serializer.

use super::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub horizon: HorizonFile,
    pub products: ProductsFile,
    pub regions: RegionsFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inventories: Vec<InventoryFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub consumers: Vec<ConsumerFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vehicles: Vec<VehicleFile>,
    #[serde(default)]
    pub times: TimesFile,
    #[serde(default)]
    pub costs: CostsFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demands: Vec<DemandFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonFile {
    pub nt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductsFile {
    #[serde(default)]
    pub raw: Vec<String>,
    #[serde(default, rename = "final")]
    pub final_: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsFile {
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyFile {
    pub to: String,
    pub vehicles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub id: String,
    pub source_type: SourceType,
    pub region: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub throughput: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub extraction_limit: f64,
    #[serde(default, skip_serializing_if = "is_zero_usize")]
    pub min_uptime: usize,
    #[serde(default, skip_serializing_if = "is_zero_usize")]
    pub min_downtime: usize,
    #[serde(default, skip_serializing_if = "is_zero_u8")]
    pub initial_op_state: u8,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub recovery_fraction: BTreeMap<String, f64>,
    #[serde(default)]
    pub products: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub consumers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supplies: Vec<SupplyFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub from: usize,
    pub to: usize,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryFile {
    pub owner: String,
    pub kind: InventoryKind,
    pub product: String,
    #[serde(default)]
    pub cap_min: f64,
    pub cap_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_buffer: Option<f64>,
    #[serde(default)]
    pub initial_qty: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target: Vec<TargetFile>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub target_penalty: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub buffer_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerFile {
    pub id: String,
    pub region: String,
    #[serde(default, rename = "type", skip_serializing_if = "String::is_empty")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub distribution_time: f64,
    #[serde(default)]
    pub vehicles: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vehicles_by_product: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleAvailabilityFile {
    pub region: String,
    pub product: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub id: String,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub availability: Vec<VehicleAvailabilityFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hire_cost: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelFile {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<String>,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceTimeFile {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<String>,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub travel: Vec<TravelFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prep: Vec<SourceTimeFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disinfection: Vec<SourceTimeFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntryFile {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<String>,
    pub per_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distribution: Vec<CostEntryFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_supply: Vec<CostEntryFile>,
}

/// Either a daily window (`day`, `start_hour`, `end_hour`, `total`) split
/// evenly over its hours, or one explicit period (`period`, `min`, `max`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandFile {
    pub consumer: String,
    pub product: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_hour: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_hour: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideFile {
    pub source: String,
    pub from: usize,
    pub to: usize,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_zero_usize(v: &usize) -> bool {
    *v == 0
}

fn is_zero_u8(v: &u8) -> bool {
    *v == 0
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses scenario text.
pub fn parse_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    Scenario::from_file(&file)
}

/// Reads and parses a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

fn check_id(id: &str) -> Result<(), ScenarioError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '.');
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::InvalidId(id.to_string()))
    }
}

struct Ids {
    map: HashMap<String, usize>,
    kind: &'static str,
}

impl Ids {
    fn new<'a>(
        kind: &'static str,
        ids: impl Iterator<Item = &'a str>,
    ) -> Result<Ids, ScenarioError> {
        let mut map = HashMap::new();
        for (i, id) in ids.enumerate() {
            check_id(id)?;
            if map.insert(id.to_string(), i).is_some() {
                return Err(ScenarioError::DuplicateId {
                    kind,
                    id: id.to_string(),
                });
            }
        }
        Ok(Ids { map, kind })
    }

    fn get(&self, id: &str, context: impl Fn() -> String) -> Result<usize, ScenarioError> {
        self.map
            .get(id)
            .copied()
            .ok_or_else(|| ScenarioError::UnknownReference {
                kind: self.kind,
                id: id.to_string(),
                context: context(),
            })
    }

    fn opt(
        &self,
        id: &Option<String>,
        context: impl Fn() -> String,
    ) -> Result<Option<usize>, ScenarioError> {
        id.as_ref().map(|i| self.get(i, context)).transpose()
    }
}

impl Scenario {
    /// Resolves ids and expands demand windows.
    pub fn from_file(f: &ScenarioFile) -> Result<Scenario, ScenarioError> {
        let products: Vec<Product> = f
            .products
            .raw
            .iter()
            .map(|id| Product {
                id: id.clone(),
                kind: ProductKind::Raw,
            })
            .chain(f.products.final_.iter().map(|id| Product {
                id: id.clone(),
                kind: ProductKind::Final,
            }))
            .collect();
        let pid = Ids::new("product", products.iter().map(|p| p.id.as_str()))?;
        let rid = Ids::new("region", f.regions.ids.iter().map(String::as_str))?;
        let sid = Ids::new("source", f.sources.iter().map(|s| s.id.as_str()))?;
        let cid = Ids::new("consumer", f.consumers.iter().map(|c| c.id.as_str()))?;
        let vid = Ids::new("vehicle", f.vehicles.iter().map(|v| v.id.as_str()))?;

        let mut sources = Vec::with_capacity(f.sources.len());
        for s in &f.sources {
            let ctx = || format!("source {}", s.id);
            let mut recovery = BTreeMap::new();
            for (p, &b) in &s.recovery_fraction {
                recovery.insert(pid.get(p, ctx)?, b);
            }
            let mut supplies = Vec::new();
            for l in &s.supplies {
                supplies.push(SupplyLink {
                    to: sid.get(&l.to, ctx)?,
                    vehicles: l
                        .vehicles
                        .iter()
                        .map(|v| vid.get(v, ctx))
                        .collect::<Result<_, _>>()?,
                });
            }
            sources.push(Source {
                id: s.id.clone(),
                source_type: s.source_type,
                region: rid.get(&s.region, ctx)?,
                throughput: s.throughput,
                extraction_limit: s.extraction_limit,
                min_uptime: s.min_uptime,
                min_downtime: s.min_downtime,
                initial_on: s.initial_op_state != 0,
                recovery,
                products: s
                    .products
                    .iter()
                    .map(|p| pid.get(p, ctx))
                    .collect::<Result<_, _>>()?,
                consumers: s
                    .consumers
                    .iter()
                    .map(|c| cid.get(c, ctx))
                    .collect::<Result<_, _>>()?,
                supplies,
            });
        }

        let mut inventories = Vec::with_capacity(f.inventories.len());
        let mut seen_inv = HashMap::new();
        for i in &f.inventories {
            let ctx = || format!("inventory {}/{}/{}", i.owner, i.kind, i.product);
            let owner = sid.get(&i.owner, ctx)?;
            let product = pid.get(&i.product, ctx)?;
            if seen_inv.insert((owner, i.kind, product), ()).is_some() {
                return Err(ScenarioError::DuplicateId {
                    kind: "inventory",
                    id: format!("{}/{}/{}", i.owner, i.kind, i.product),
                });
            }
            inventories.push(Inventory {
                owner,
                kind: i.kind,
                product,
                cap_min: i.cap_min,
                cap_max: i.cap_max,
                cap_buffer: i.cap_buffer,
                initial_qty: i.initial_qty,
                target: i
                    .target
                    .iter()
                    .map(|t| TargetSpan {
                        from: t.from,
                        to: t.to,
                        kl: t.kl,
                    })
                    .collect(),
                target_penalty: i.target_penalty,
                buffer_penalty: i.buffer_penalty,
            });
        }

        let mut consumers = Vec::with_capacity(f.consumers.len());
        for c in &f.consumers {
            let ctx = || format!("consumer {}", c.id);
            let mut by_product = BTreeMap::new();
            for (p, vs) in &c.vehicles_by_product {
                by_product.insert(
                    pid.get(p, ctx)?,
                    vs.iter()
                        .map(|v| vid.get(v, ctx))
                        .collect::<Result<_, _>>()?,
                );
            }
            consumers.push(ConsumerCluster {
                id: c.id.clone(),
                region: rid.get(&c.region, ctx)?,
                kind: c.kind.clone(),
                distribution_time: c.distribution_time,
                vehicles: c
                    .vehicles
                    .iter()
                    .map(|v| vid.get(v, ctx))
                    .collect::<Result<_, _>>()?,
                vehicles_by_product: by_product,
                demand: BTreeMap::new(),
            });
        }

        let mut vehicles = Vec::with_capacity(f.vehicles.len());
        for v in &f.vehicles {
            let ctx = || format!("vehicle {}", v.id);
            let mut availability = BTreeMap::new();
            for a in &v.availability {
                let key = (rid.get(&a.region, ctx)?, pid.get(&a.product, ctx)?);
                if availability.insert(key, a.count).is_some() {
                    return Err(ScenarioError::DuplicateId {
                        kind: "vehicle availability",
                        id: format!("{}/{}/{}", v.id, a.region, a.product),
                    });
                }
            }
            let mut hire_cost = BTreeMap::new();
            for (p, &cost) in &v.hire_cost {
                hire_cost.insert(pid.get(p, ctx)?, cost);
            }
            vehicles.push(VehicleClass {
                id: v.id.clone(),
                capacity: v.capacity,
                availability,
                hire_cost,
            });
        }

        let endpoint = |to: &str, ctx: &dyn Fn() -> String| -> Result<Endpoint, ScenarioError> {
            if let Some(&c) = cid.map.get(to) {
                Ok(Endpoint::Consumer(c))
            } else if let Some(&s) = sid.map.get(to) {
                Ok(Endpoint::Source(s))
            } else {
                Err(ScenarioError::UnknownReference {
                    kind: "consumer or source",
                    id: to.to_string(),
                    context: ctx(),
                })
            }
        };
        let link = |from: &str,
                    to: &str,
                    product: &Option<String>,
                    vehicle: &Option<String>,
                    value: f64,
                    what: &str|
         -> Result<LinkEntry, ScenarioError> {
            let ctx = || format!("{what} {from}->{to}");
            Ok(LinkEntry {
                from: sid.get(from, ctx)?,
                to: endpoint(to, &ctx)?,
                product: pid.opt(product, ctx)?,
                vehicle: vid.opt(vehicle, ctx)?,
                value,
            })
        };
        let source_time = |e: &SourceTimeFile, what: &str| -> Result<SourceEntry, ScenarioError> {
            let ctx = || format!("{what} {}", e.source);
            Ok(SourceEntry {
                source: sid.get(&e.source, ctx)?,
                vehicle: vid.opt(&e.vehicle, ctx)?,
                hours: e.hours,
            })
        };
        let times = LinkTimes {
            travel: f
                .times
                .travel
                .iter()
                .map(|e| link(&e.from, &e.to, &e.product, &e.vehicle, e.hours, "travel"))
                .collect::<Result<_, _>>()?,
            prep: f
                .times
                .prep
                .iter()
                .map(|e| source_time(e, "prep"))
                .collect::<Result<_, _>>()?,
            disinfection: f
                .times
                .disinfection
                .iter()
                .map(|e| source_time(e, "disinfection"))
                .collect::<Result<_, _>>()?,
        };
        let costs = CostTable {
            distribution: f
                .costs
                .distribution
                .iter()
                .map(|e| {
                    link(
                        &e.from,
                        &e.to,
                        &e.product,
                        &e.vehicle,
                        e.per_kl,
                        "distribution cost",
                    )
                })
                .collect::<Result<_, _>>()?,
            raw_supply: f
                .costs
                .raw_supply
                .iter()
                .map(|e| {
                    link(
                        &e.from,
                        &e.to,
                        &e.product,
                        &e.vehicle,
                        e.per_kl,
                        "raw supply cost",
                    )
                })
                .collect::<Result<_, _>>()?,
        };

        for d in &f.demands {
            let ctx = || format!("demand of {} for {}", d.consumer, d.product);
            let c = cid.get(&d.consumer, ctx)?;
            let p = pid.get(&d.product, ctx)?;
            let entries = expand_demand(d).map_err(|msg| ScenarioError::Syntax {
                line: 0,
                column: 0,
                message: format!("{}: {msg}", ctx()),
            })?;
            for (t, min, max) in entries {
                let e = consumers[c].demand.entry((p, t)).or_default();
                e.min += min;
                e.max += max;
            }
        }

        let mut overrides = Vec::new();
        for o in &f.overrides {
            let ctx = || "override".to_string();
            overrides.push(MaintenanceOverride {
                source: sid.get(&o.source, ctx)?,
                from: o.from,
                to: o.to,
            });
        }

        let first_demand = consumers
            .iter()
            .flat_map(|c| c.demand.iter())
            .filter(|(_, b)| b.min > 0.0 || b.max > 0.0)
            .map(|((_, t), _)| *t)
            .min();
        let demand_start = f.horizon.demand_start.or(first_demand).unwrap_or(1);

        Ok(Scenario {
            horizon: Horizon {
                nt: f.horizon.nt,
                demand_start,
            },
            products,
            regions: f.regions.ids.clone(),
            sources,
            inventories,
            consumers,
            vehicles,
            times,
            costs,
            overrides,
        })
    }

    /// Canonical file form: ids as written, demand as explicit periods.
    pub fn to_file(&self) -> ScenarioFile {
        let pn = |p: ProductIdx| self.products[p].id.clone();
        let vn = |v: VehicleIdx| self.vehicles[v].id.clone();
        let sn = |s: SourceIdx| self.sources[s].id.clone();
        let rn = |r: RegionIdx| self.regions[r].clone();
        let en = |e: Endpoint| match e {
            Endpoint::Consumer(c) => self.consumers[c].id.clone(),
            Endpoint::Source(s) => sn(s),
        };
        ScenarioFile {
            horizon: HorizonFile {
                nt: self.horizon.nt,
                demand_start: Some(self.horizon.demand_start),
            },
            products: ProductsFile {
                raw: self
                    .products
                    .iter()
                    .filter(|p| p.kind == ProductKind::Raw)
                    .map(|p| p.id.clone())
                    .collect(),
                final_: self
                    .products
                    .iter()
                    .filter(|p| p.kind == ProductKind::Final)
                    .map(|p| p.id.clone())
                    .collect(),
            },
            regions: RegionsFile {
                ids: self.regions.clone(),
            },
            sources: self
                .sources
                .iter()
                .map(|s| SourceFile {
                    id: s.id.clone(),
                    source_type: s.source_type,
                    region: rn(s.region),
                    throughput: s.throughput,
                    extraction_limit: s.extraction_limit,
                    min_uptime: s.min_uptime,
                    min_downtime: s.min_downtime,
                    initial_op_state: s.initial_on as u8,
                    recovery_fraction: s.recovery.iter().map(|(&p, &b)| (pn(p), b)).collect(),
                    products: s.products.iter().map(|&p| pn(p)).collect(),
                    consumers: s
                        .consumers
                        .iter()
                        .map(|&c| self.consumers[c].id.clone())
                        .collect(),
                    supplies: s
                        .supplies
                        .iter()
                        .map(|l| SupplyFile {
                            to: sn(l.to),
                            vehicles: l.vehicles.iter().map(|&v| vn(v)).collect(),
                        })
                        .collect(),
                })
                .collect(),
            inventories: self
                .inventories
                .iter()
                .map(|i| InventoryFile {
                    owner: sn(i.owner),
                    kind: i.kind,
                    product: pn(i.product),
                    cap_min: i.cap_min,
                    cap_max: i.cap_max,
                    cap_buffer: i.cap_buffer,
                    initial_qty: i.initial_qty,
                    target: i
                        .target
                        .iter()
                        .map(|t| TargetFile {
                            from: t.from,
                            to: t.to,
                            kl: t.kl,
                        })
                        .collect(),
                    target_penalty: i.target_penalty,
                    buffer_penalty: i.buffer_penalty,
                })
                .collect(),
            consumers: self
                .consumers
                .iter()
                .map(|c| ConsumerFile {
                    id: c.id.clone(),
                    region: rn(c.region),
                    kind: c.kind.clone(),
                    distribution_time: c.distribution_time,
                    vehicles: c.vehicles.iter().map(|&v| vn(v)).collect(),
                    vehicles_by_product: c
                        .vehicles_by_product
                        .iter()
                        .map(|(&p, vs)| (pn(p), vs.iter().map(|&v| vn(v)).collect()))
                        .collect(),
                })
                .collect(),
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleFile {
                    id: v.id.clone(),
                    capacity: v.capacity,
                    availability: v
                        .availability
                        .iter()
                        .map(|(&(r, p), &count)| VehicleAvailabilityFile {
                            region: rn(r),
                            product: pn(p),
                            count,
                        })
                        .collect(),
                    hire_cost: v.hire_cost.iter().map(|(&p, &c)| (pn(p), c)).collect(),
                })
                .collect(),
            times: TimesFile {
                travel: self
                    .times
                    .travel
                    .iter()
                    .map(|e| TravelFile {
                        from: sn(e.from),
                        to: en(e.to),
                        product: e.product.map(pn),
                        vehicle: e.vehicle.map(vn),
                        hours: e.value,
                    })
                    .collect(),
                prep: self
                    .times
                    .prep
                    .iter()
                    .map(|e| SourceTimeFile {
                        source: sn(e.source),
                        vehicle: e.vehicle.map(vn),
                        hours: e.hours,
                    })
                    .collect(),
                disinfection: self
                    .times
                    .disinfection
                    .iter()
                    .map(|e| SourceTimeFile {
                        source: sn(e.source),
                        vehicle: e.vehicle.map(vn),
                        hours: e.hours,
                    })
                    .collect(),
            },
            costs: CostsFile {
                distribution: self
                    .costs
                    .distribution
                    .iter()
                    .map(|e| CostEntryFile {
                        from: sn(e.from),
                        to: en(e.to),
                        product: e.product.map(pn),
                        vehicle: e.vehicle.map(vn),
                        per_kl: e.value,
                    })
                    .collect(),
                raw_supply: self
                    .costs
                    .raw_supply
                    .iter()
                    .map(|e| CostEntryFile {
                        from: sn(e.from),
                        to: en(e.to),
                        product: e.product.map(pn),
                        vehicle: e.vehicle.map(vn),
                        per_kl: e.value,
                    })
                    .collect(),
            },
            demands: self
                .consumers
                .iter()
                .flat_map(|c| {
                    c.demand.iter().map(move |(&(p, t), b)| DemandFile {
                        consumer: c.id.clone(),
                        product: pn(p),
                        day: None,
                        start_hour: None,
                        end_hour: None,
                        total: None,
                        period: Some(t),
                        min: Some(b.min),
                        max: Some(b.max),
                    })
                })
                .collect(),
            overrides: self
                .overrides
                .iter()
                .map(|o| OverrideFile {
                    source: sn(o.source),
                    from: o.from,
                    to: o.to,
                })
                .collect(),
        }
    }

    /// Canonical TOML text; parsing it yields an equal scenario.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario file types always serialize")
    }
}

/// Expands one demand entry into `(period, min, max)` triples.
fn expand_demand(d: &DemandFile) -> Result<Vec<(usize, f64, f64)>, String> {
    match (d.day, d.start_hour, d.end_hour, d.total, d.period) {
        (Some(day), Some(a), Some(b), Some(total), None) if d.min.is_none() && d.max.is_none() => {
            if day < 1 {
                return Err("day numbers start at 1".into());
            }
            if a >= b || b > 24 {
                return Err(format!("window {a}-{b} must satisfy start < end <= 24"));
            }
            let hours = b - a;
            let per = total / hours as f64;
            Ok(((day - 1) * 24 + a + 1..=(day - 1) * 24 + b)
                .map(|t| (t, per, per))
                .collect())
        }
        (None, None, None, None, Some(t)) => {
            let max = d.max.or(d.min).unwrap_or(0.0);
            let min = d.min.unwrap_or(0.0);
            Ok(vec![(t, min, max)])
        }
        _ => Err("use either day/start_hour/end_hour/total or period/min/max".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_expands_to_hourly_periods() {
        let d = DemandFile {
            consumer: "c".into(),
            product: "p".into(),
            day: Some(2),
            start_hour: Some(5),
            end_hour: Some(9),
            total: Some(100.0),
            period: None,
            min: None,
            max: None,
        };
        let e = expand_demand(&d).unwrap();
        assert_eq!(
            e.iter().map(|x| x.0).collect::<Vec<_>>(),
            vec![30, 31, 32, 33]
        );
        assert!(e.iter().all(|x| x.1 == 25.0 && x.2 == 25.0));
    }

    #[test]
    fn line_and_column_are_one_based() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }
}
