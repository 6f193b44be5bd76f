//! Plant facts: the physical hierarchy and its sensors/actuators, ingested
//! from two CSV files and mapped to graph triples.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kg::{Graph, Iri, Literal, Triple};

use super::vocab::{self, din61360, isa88, sosa};
use super::{check_identifier, IriScheme, MapError};
use crate::kg::rdf;

/// Physical-hierarchy levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Isa88Class {
    Enterprise,
    Site,
    Area,
    ProcessCell,
    Unit,
    EquipmentModule,
    ControlModule,
}

impl Isa88Class {
    pub fn iri(self) -> Iri {
        Iri::new(match self {
            Isa88Class::Enterprise => isa88::ENTERPRISE,
            Isa88Class::Site => isa88::SITE,
            Isa88Class::Area => isa88::AREA,
            Isa88Class::ProcessCell => isa88::PROCESS_CELL,
            Isa88Class::Unit => isa88::UNIT,
            Isa88Class::EquipmentModule => isa88::EQUIPMENT_MODULE,
            Isa88Class::ControlModule => isa88::CONTROL_MODULE,
        })
    }
}

impl FromStr for Isa88Class {
    type Err = MapError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Enterprise" => Isa88Class::Enterprise,
            "Site" => Isa88Class::Site,
            "Area" => Isa88Class::Area,
            "ProcessCell" => Isa88Class::ProcessCell,
            "Unit" => Isa88Class::Unit,
            "EquipmentModule" => Isa88Class::EquipmentModule,
            "ControlModule" => Isa88Class::ControlModule,
            other => return Err(MapError::BadClass(other.to_owned())),
        })
    }
}

impl fmt::Display for Isa88Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Isa88Class::Enterprise => "Enterprise",
            Isa88Class::Site => "Site",
            Isa88Class::Area => "Area",
            Isa88Class::ProcessCell => "ProcessCell",
            Isa88Class::Unit => "Unit",
            Isa88Class::EquipmentModule => "EquipmentModule",
            Isa88Class::ControlModule => "ControlModule",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceKind {
    Sensor,
    Actuator,
}

impl FromStr for DeviceKind {
    type Err = MapError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Sensor" => DeviceKind::Sensor,
            "Actuator" => DeviceKind::Actuator,
            other => return Err(MapError::BadKind(other.to_owned())),
        })
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Sensor => "Sensor",
            DeviceKind::Actuator => "Actuator",
        })
    }
}

/// One hierarchy entity. The single root row has an empty parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyRow {
    pub id: String,
    pub class: Isa88Class,
    pub parent: Option<String>,
}

/// One sensor or actuator, its host entity, and the property it observes or
/// acts on with a human-readable semantic label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceRow {
    pub id: String,
    pub kind: DeviceKind,
    pub host: String,
    pub property: String,
    pub semantic_label: String,
}

/// Validated plant facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantFacts {
    hierarchy: Vec<HierarchyRow>,
    devices: Vec<DeviceRow>,
    root: String,
}

impl PlantFacts {
    pub fn new(hierarchy: Vec<HierarchyRow>, devices: Vec<DeviceRow>) -> Result<Self, MapError> {
        let mut roots = Vec::new();
        for row in &hierarchy {
            check_identifier(&row.id)?;
            if hierarchy.iter().filter(|r| r.id == row.id).count() > 1 {
                return Err(MapError::DuplicateEntity(row.id.clone()));
            }
            match &row.parent {
                None => roots.push(row.id.clone()),
                Some(parent) => {
                    if !hierarchy.iter().any(|r| &r.id == parent) {
                        return Err(MapError::DanglingParent {
                            child: row.id.clone(),
                            parent: parent.clone(),
                        });
                    }
                }
            }
        }
        if roots.len() != 1 {
            return Err(MapError::RootCount(roots.len()));
        }
        // walk each chain upwards; revisiting a node means a cycle
        for row in &hierarchy {
            let mut seen = vec![&row.id];
            let mut cursor = &row.parent;
            while let Some(parent) = cursor {
                if seen.contains(&parent) {
                    return Err(MapError::HierarchyCycle(parent.clone()));
                }
                seen.push(parent);
                cursor = &hierarchy
                    .iter()
                    .find(|r| &r.id == parent)
                    .expect("parent resolved above")
                    .parent;
            }
        }
        for dev in &devices {
            check_identifier(&dev.id)?;
            check_identifier(&dev.property)?;
            if devices.iter().filter(|d| d.id == dev.id).count() > 1 {
                return Err(MapError::DuplicateEntity(dev.id.clone()));
            }
            if devices
                .iter()
                .filter(|d| d.property == dev.property)
                .count()
                > 1
            {
                return Err(MapError::DuplicateEntity(dev.property.clone()));
            }
            if !hierarchy.iter().any(|r| r.id == dev.host) {
                return Err(MapError::DanglingHost {
                    device: dev.id.clone(),
                    host: dev.host.clone(),
                });
            }
        }
        let root = roots.pop().expect("exactly one root");
        Ok(PlantFacts {
            hierarchy,
            devices,
            root,
        })
    }

    /// Id of the hierarchy root; instance IRIs are minted under it.
    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn hierarchy(&self) -> &[HierarchyRow] {
        &self.hierarchy
    }

    pub fn devices(&self) -> &[DeviceRow] {
        &self.devices
    }

    pub fn device(&self, id: &str) -> Option<&DeviceRow> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&HierarchyRow> {
        self.hierarchy.iter().find(|r| r.id == id)
    }

    pub fn iri_scheme(&self) -> IriScheme {
        IriScheme::new(self.root.clone())
    }
}

/// Maps plant facts to triples: entity types, `hasPart` edges, device
/// typing and hosting, and property semantics. Every entity hosting a
/// device is additionally typed as a platform.
pub fn map_plant(facts: &PlantFacts) -> Result<Graph, MapError> {
    let scheme = facts.iri_scheme();
    let mut g = Graph::new();
    for (prefix, ns) in vocab::standard_prefixes() {
        g.set_prefix(prefix, ns);
    }
    for row in facts.hierarchy() {
        let entity = scheme.equipment(&row.id);
        g.insert(Triple::new(entity.clone(), rdf::TYPE, row.class.iri()));
        if let Some(parent) = &row.parent {
            g.insert(Triple::new(
                scheme.equipment(parent),
                isa88::HAS_PART,
                entity.clone(),
            ));
        }
    }
    for dev in facts.devices() {
        let device = scheme.device(&dev.id);
        let host = scheme.equipment(&dev.host);
        let property = scheme.property(&dev.property);
        let (device_class, property_class, link) = match dev.kind {
            DeviceKind::Sensor => (sosa::SENSOR, sosa::OBSERVABLE_PROPERTY, sosa::OBSERVES),
            DeviceKind::Actuator => (
                sosa::ACTUATOR,
                sosa::ACTUATABLE_PROPERTY,
                sosa::ACTS_ON_PROPERTY,
            ),
        };
        g.insert(Triple::new(
            device.clone(),
            rdf::TYPE,
            Iri::new(device_class),
        ));
        g.insert(Triple::new(
            device.clone(),
            sosa::IS_HOSTED_BY,
            host.clone(),
        ));
        g.insert(Triple::new(device.clone(), link, property.clone()));
        g.insert(Triple::new(
            host.clone(),
            rdf::TYPE,
            Iri::new(sosa::PLATFORM),
        ));
        g.insert(Triple::new(
            property.clone(),
            rdf::TYPE,
            Iri::new(property_class),
        ));
        g.insert(Triple::new(
            property.clone(),
            rdf::TYPE,
            Iri::new(din61360::DATA_ELEMENT),
        ));
        g.insert(Triple::new(
            property,
            din61360::TYPE_DESCRIPTION,
            Literal::string(dev.semantic_label.clone()),
        ));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// CSV files
// ---------------------------------------------------------------------------

/// Reads `hierarchy.csv` with the mandatory header `id,class,parent`; the
/// root row leaves `parent` empty.
pub fn read_hierarchy_csv<R: Read>(r: R) -> Result<Vec<HierarchyRow>, MapError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(0).unwrap_or("").trim().to_owned();
        let class: Isa88Class = record.get(1).unwrap_or("").trim().parse()?;
        let parent = record.get(2).unwrap_or("").trim();
        rows.push(HierarchyRow {
            id,
            class,
            parent: if parent.is_empty() {
                None
            } else {
                Some(parent.to_owned())
            },
        });
    }
    Ok(rows)
}

pub fn write_hierarchy_csv<W: Write>(w: W, rows: &[HierarchyRow]) -> Result<(), MapError> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["id", "class", "parent"])?;
    for row in rows {
        writer.write_record([
            row.id.as_str(),
            &row.class.to_string(),
            row.parent.as_deref().unwrap_or(""),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads `devices.csv` with the mandatory header
/// `id,kind,host,property,semantic_label`.
pub fn read_devices_csv<R: Read>(r: R) -> Result<Vec<DeviceRow>, MapError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(DeviceRow {
            id: record.get(0).unwrap_or("").trim().to_owned(),
            kind: record.get(1).unwrap_or("").trim().parse()?,
            host: record.get(2).unwrap_or("").trim().to_owned(),
            property: record.get(3).unwrap_or("").trim().to_owned(),
            semantic_label: record.get(4).unwrap_or("").trim().to_owned(),
        });
    }
    Ok(rows)
}

pub fn write_devices_csv<W: Write>(w: W, rows: &[DeviceRow]) -> Result<(), MapError> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["id", "kind", "host", "property", "semantic_label"])?;
    for row in rows {
        writer.write_record([
            row.id.as_str(),
            &row.kind.to_string(),
            &row.host,
            &row.property,
            &row.semantic_label,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{evaluate, PatternTerm, Query, TriplePattern};

    fn row(id: &str, class: Isa88Class, parent: Option<&str>) -> HierarchyRow {
        HierarchyRow {
            id: id.into(),
            class,
            parent: parent.map(str::to_owned),
        }
    }

    fn device(id: &str, kind: DeviceKind, host: &str, property: &str, label: &str) -> DeviceRow {
        DeviceRow {
            id: id.into(),
            kind,
            host: host.into(),
            property: property.into(),
            semantic_label: label.into(),
        }
    }

    fn small_facts() -> PlantFacts {
        PlantFacts::new(
            vec![
                row("Plant", Isa88Class::ProcessCell, None),
                row("Tank_B201", Isa88Class::EquipmentModule, Some("Plant")),
            ],
            vec![
                device(
                    "tank_B201.level",
                    DeviceKind::Sensor,
                    "Tank_B201",
                    "fillingLevel_B201",
                    "Filling Level of Tank_B201",
                ),
                device(
                    "B201_isFull",
                    DeviceKind::Sensor,
                    "Tank_B201",
                    "fillLimit_B201",
                    "Fill Limit of Tank_B201",
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_facts_produce_prefixes_only() {
        let facts = PlantFacts::new(vec![row("P", Isa88Class::Site, None)], vec![]).unwrap();
        let g = map_plant(&facts).unwrap();
        assert_eq!(g.len(), 1); // just the root's type triple
        assert!(g.prefixes().contains_key("sosa"));
    }

    #[test]
    fn sensors_of_a_tank_are_queryable() {
        let g = map_plant(&small_facts()).unwrap();
        let q = Query::new(
            &["?sensor"],
            vec![
                TriplePattern::new(
                    PatternTerm::var("?sensor"),
                    PatternTerm::iri(crate::kg::rdf::TYPE),
                    PatternTerm::iri(sosa::SENSOR),
                ),
                TriplePattern::new(
                    PatternTerm::var("?sensor"),
                    PatternTerm::iri(sosa::IS_HOSTED_BY),
                    PatternTerm::iri("http://example.org/cpps/Plant/equipment/Tank_B201"),
                ),
            ],
        );
        let rows = evaluate(&g, &q).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn rejects_dangling_parent_and_duplicate_entity() {
        let err =
            PlantFacts::new(vec![row("A", Isa88Class::Site, Some("missing"))], vec![]).unwrap_err();
        assert!(matches!(err, MapError::DanglingParent { .. }));
        let err = PlantFacts::new(
            vec![
                row("A", Isa88Class::Site, None),
                row("A", Isa88Class::Area, Some("A")),
            ],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, MapError::DuplicateEntity(_)));
    }

    #[test]
    fn rejects_multiple_roots() {
        let err = PlantFacts::new(
            vec![
                row("A", Isa88Class::Site, None),
                row("B", Isa88Class::Site, None),
            ],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, MapError::RootCount(2)));
    }

    #[test]
    fn csv_round_trip() {
        let facts = small_facts();
        let mut h = Vec::new();
        write_hierarchy_csv(&mut h, facts.hierarchy()).unwrap();
        let mut d = Vec::new();
        write_devices_csv(&mut d, facts.devices()).unwrap();
        let parsed = PlantFacts::new(
            read_hierarchy_csv(&h[..]).unwrap(),
            read_devices_csv(&d[..]).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed, facts);
    }
}
