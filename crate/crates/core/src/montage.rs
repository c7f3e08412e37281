//! Electrodes, contact points and the electrode/zone neighborhoods that drive
//! channel-set extensions.
//!
//! Channel labels follow the usual clinical shorthand: an electrode name made
//! of letters followed by a 1-based contact index (`LA9`). Clinician
//! selections are written as comma separated labels or ranges
//! (`"LA1-3, LB1-2"`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_CONTACTS: u32 = 32;
/// Contact counts outside this range are accepted but logged.
pub const TYPICAL_CONTACTS: (u32, u32) = (6, 16);

/// One contact point on an electrode, e.g. `LA9`.
///
/// Ordering is by electrode name, then by numeric index, so `LA2 < LA10 < LB1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelLabel {
    electrode: String,
    index: u32,
}

impl ChannelLabel {
    pub fn new(electrode: &str, index: u32) -> Result<Self> {
        let electrode = electrode.trim().to_ascii_uppercase();
        if electrode.is_empty() || !electrode.bytes().all(|b| b.is_ascii_uppercase()) || index == 0 {
            return Err(Error::MalformedLabel(format!("{electrode}{index}")));
        }
        Ok(Self { electrode, index })
    }

    pub fn electrode(&self) -> &str {
        &self.electrode
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.electrode, self.index)
    }
}

impl FromStr for ChannelLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_channel_label(s)
    }
}

impl Serialize for ChannelLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_channel_label(&text).map_err(serde::de::Error::custom)
    }
}

fn normalize_token(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_uppercase()
}

/// Splits a normalized token into its leading letters and the remainder.
fn split_letters(token: &str) -> (&str, &str) {
    let end = token.find(|c: char| !c.is_ascii_uppercase()).unwrap_or(token.len());
    token.split_at(end)
}

fn parse_index(digits: &str, original: &str) -> Result<u32> {
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::MalformedLabel(original.to_string()));
    }
    match digits.parse::<u32>() {
        Ok(0) | Err(_) => Err(Error::MalformedLabel(original.to_string())),
        Ok(index) => Ok(index),
    }
}

/// Parses `LA9`-style labels. Case and interior whitespace are normalized.
pub fn parse_channel_label(text: &str) -> Result<ChannelLabel> {
    let token = normalize_token(text);
    let (letters, digits) = split_letters(&token);
    if letters.is_empty() {
        return Err(Error::MalformedLabel(text.to_string()));
    }
    let index = parse_index(digits, text)?;
    Ok(ChannelLabel {
        electrode: letters.to_string(),
        index,
    })
}

/// Expands clinician shorthand such as `"LA1-3, LB1-2"` into individual labels.
///
/// Range ends may be written as a bare number (`LA1-3`) or a full label on the
/// same electrode (`LA1-LA3`). Duplicates are dropped, keeping the first
/// occurrence.
pub fn expand_range(text: &str) -> Result<Vec<ChannelLabel>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for raw in text.split(',') {
        let token = normalize_token(raw);
        if token.is_empty() {
            continue;
        }
        let labels = match token.split_once('-') {
            None => vec![parse_channel_label(&token)?],
            Some((start, end)) => {
                let start = parse_channel_label(start)?;
                let (end_letters, end_digits) = split_letters(end);
                if !end_letters.is_empty() && end_letters != start.electrode {
                    return Err(Error::MalformedLabel(raw.trim().to_string()));
                }
                let end = parse_index(end_digits, raw.trim())?;
                if end < start.index {
                    return Err(Error::InvertedRange(raw.trim().to_string()));
                }
                (start.index..=end)
                    .map(|index| ChannelLabel {
                        electrode: start.electrode.clone(),
                        index,
                    })
                    .collect()
            }
        };
        for label in labels {
            if seen.insert(label.clone()) {
                out.push(label);
            } else {
                log::warn!("duplicate channel {label} in selection {text:?} ignored");
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Electrode {
    name: String,
    contact_count: u32,
    zone_neighbors: BTreeSet<String>,
}

impl Electrode {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contact_count(&self) -> u32 {
        self.contact_count
    }

    pub fn zone_neighbors(&self) -> &BTreeSet<String> {
        &self.zone_neighbors
    }

    pub fn channels(&self) -> impl Iterator<Item = ChannelLabel> + '_ {
        (1..=self.contact_count).map(|index| ChannelLabel {
            electrode: self.name.clone(),
            index,
        })
    }
}

/// On-disk montage description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MontageFile {
    pub electrodes: Vec<ElectrodeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeEntry {
    pub name: String,
    pub contacts: u32,
    #[serde(default)]
    pub zone_neighbors: Vec<String>,
}

/// Implanted electrodes keyed by name. Immutable once built; adjacency is
/// stored symmetrically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Montage {
    electrodes: BTreeMap<String, Electrode>,
}

impl Montage {
    pub fn from_file_data(file: &MontageFile) -> Result<Self> {
        let mut electrodes: BTreeMap<String, Electrode> = BTreeMap::new();
        for entry in &file.electrodes {
            let name = normalize_token(&entry.name);
            if name.is_empty() || !name.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(Error::Schema(format!("invalid electrode name {:?}", entry.name)));
            }
            if !(1..=MAX_CONTACTS).contains(&entry.contacts) {
                return Err(Error::Schema(format!(
                    "electrode {name} has {} contacts, expected 1..={MAX_CONTACTS}",
                    entry.contacts
                )));
            }
            if !(TYPICAL_CONTACTS.0..=TYPICAL_CONTACTS.1).contains(&entry.contacts) {
                log::warn!(
                    "electrode {name} has {} contacts, outside the typical {}-{} range",
                    entry.contacts,
                    TYPICAL_CONTACTS.0,
                    TYPICAL_CONTACTS.1
                );
            }
            let electrode = Electrode {
                name: name.clone(),
                contact_count: entry.contacts,
                zone_neighbors: entry.zone_neighbors.iter().map(|n| normalize_token(n)).collect(),
            };
            if electrodes.insert(name.clone(), electrode).is_some() {
                return Err(Error::Schema(format!("duplicate electrode {name}")));
            }
        }

        let mut edges = Vec::new();
        for electrode in electrodes.values() {
            for neighbor in &electrode.zone_neighbors {
                if neighbor == &electrode.name {
                    return Err(Error::Schema(format!(
                        "electrode {neighbor} lists itself as a neighbor"
                    )));
                }
                if !electrodes.contains_key(neighbor) {
                    return Err(Error::UnknownElectrode(neighbor.clone()));
                }
                edges.push((neighbor.clone(), electrode.name.clone()));
            }
        }
        for (from, to) in edges {
            if let Some(electrode) = electrodes.get_mut(&from) {
                electrode.zone_neighbors.insert(to);
            }
        }
        Ok(Self { electrodes })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MontageFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file_data(&file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: MontageFile =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        Self::from_file_data(&file)
    }

    pub fn to_file_data(&self) -> MontageFile {
        MontageFile {
            electrodes: self
                .electrodes
                .values()
                .map(|e| ElectrodeEntry {
                    name: e.name.clone(),
                    contacts: e.contact_count,
                    zone_neighbors: e.zone_neighbors.iter().cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn electrodes(&self) -> impl Iterator<Item = &Electrode> {
        self.electrodes.values()
    }

    pub fn electrode(&self, name: &str) -> Option<&Electrode> {
        self.electrodes.get(name)
    }

    /// Every contact point, ordered by electrode then index.
    pub fn channels(&self) -> Vec<ChannelLabel> {
        self.electrodes.values().flat_map(Electrode::channels).collect()
    }

    pub fn channel_count(&self) -> usize {
        self.electrodes.values().map(|e| e.contact_count as usize).sum()
    }

    pub fn contains(&self, label: &ChannelLabel) -> bool {
        self.electrodes
            .get(&label.electrode)
            .is_some_and(|e| label.index <= e.contact_count)
    }

    pub fn resolve(&self, label: &ChannelLabel) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::UnknownChannel(label.to_string()))
        }
    }

    fn host_electrodes<'a>(&self, selected: impl IntoIterator<Item = &'a ChannelLabel>) -> Result<BTreeSet<String>> {
        let mut hosts = BTreeSet::new();
        for label in selected {
            self.resolve(label)?;
            hosts.insert(label.electrode.clone());
        }
        Ok(hosts)
    }

    fn expand_electrodes(&self, names: &BTreeSet<String>) -> Vec<ChannelLabel> {
        names
            .iter()
            .filter_map(|name| self.electrodes.get(name))
            .flat_map(Electrode::channels)
            .collect()
    }

    /// All contacts on every electrode hosting a selected contact.
    pub fn electrode_extension<'a>(
        &self,
        selected: impl IntoIterator<Item = &'a ChannelLabel>,
    ) -> Result<Vec<ChannelLabel>> {
        let hosts = self.host_electrodes(selected)?;
        Ok(self.expand_electrodes(&hosts))
    }

    /// The electrode extension plus all contacts on electrodes adjacent to a
    /// host electrode.
    pub fn zone_extension<'a>(
        &self,
        selected: impl IntoIterator<Item = &'a ChannelLabel>,
    ) -> Result<Vec<ChannelLabel>> {
        let hosts = self.host_electrodes(selected)?;
        let mut names = hosts.clone();
        for host in &hosts {
            if let Some(electrode) = self.electrodes.get(host) {
                names.extend(electrode.zone_neighbors.iter().cloned());
            }
        }
        Ok(self.expand_electrodes(&names))
    }
}
