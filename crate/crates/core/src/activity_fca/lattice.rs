//! Cross tables, derivation operators, concept enumeration and the concept
//! lattice. Sets are `u64` bitmasks, so tables are limited to 64 objects and
//! 64 attributes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FcaError;
use crate::chronicle::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Experiential,
    Temporal,
    Spatial,
    Physiological,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Experiential => "Experiential",
            AttributeKind::Temporal => "Temporal",
            AttributeKind::Spatial => "Spatial",
            AttributeKind::Physiological => "Physiological",
        }
    }
}

impl FromStr for AttributeKind {
    type Err = FcaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "experiential" => Ok(AttributeKind::Experiential),
            "temporal" => Ok(AttributeKind::Temporal),
            "spatial" => Ok(AttributeKind::Spatial),
            "physiological" => Ok(AttributeKind::Physiological),
            _ => Err(FcaError::Parse { line: 1, reason: format!("unknown attribute kind {s:?}") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeTag {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeTag {
    pub fn new(name: &str, kind: AttributeKind) -> Self {
        AttributeTag { name: name.to_string(), kind }
    }
}

impl fmt::Display for AttributeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.kind.as_str())
    }
}

pub const MAX_SIDE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTable {
    pub objects: Vec<ActivityLabel>,
    pub attributes: Vec<AttributeTag>,
    /// `rows[i]` has bit `j` set when object `i` has attribute `j`.
    pub rows: Vec<u64>,
}

/// Which side of the table a subset is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Objects,
    Attributes,
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits(m: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| m >> i & 1 == 1)
}

impl CrossTable {
    pub fn new(
        objects: Vec<ActivityLabel>,
        attributes: Vec<AttributeTag>,
        relation: &[Vec<bool>],
    ) -> Result<Self, FcaError> {
        if objects.len() > MAX_SIDE || attributes.len() > MAX_SIDE {
            return Err(FcaError::TableTooLarge {
                objects: objects.len(),
                attributes: attributes.len(),
            });
        }
        if relation.len() != objects.len() || relation.iter().any(|r| r.len() != attributes.len()) {
            return Err(FcaError::Shape);
        }
        let uniq_o: BTreeSet<_> = objects.iter().collect();
        let uniq_a: BTreeSet<_> = attributes.iter().map(|a| &a.name).collect();
        if uniq_o.len() != objects.len() || uniq_a.len() != attributes.len() {
            return Err(FcaError::Duplicate);
        }
        let rows = relation
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, b)| **b).fold(0u64, |m, (j, _)| m | 1 << j))
            .collect();
        Ok(CrossTable { objects, attributes, rows })
    }

    pub fn all_objects(&self) -> u64 {
        mask(self.objects.len())
    }

    pub fn all_attributes(&self) -> u64 {
        mask(self.attributes.len())
    }

    /// Attributes shared by every object in `ext`.
    pub fn intent_of(&self, ext: u64) -> u64 {
        bits(ext).fold(self.all_attributes(), |acc, i| acc & self.rows[i])
    }

    /// Objects having every attribute in `int`.
    pub fn extent_of(&self, int: u64) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| *r & int == int)
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name.eq_ignore_ascii_case(name))
    }

    pub fn object_index(&self, label: ActivityLabel) -> Option<usize> {
        self.objects.iter().position(|o| *o == label)
    }

    pub fn attribute_mask<S: AsRef<str>>(&self, names: &[S]) -> Result<u64, FcaError> {
        names.iter().try_fold(0u64, |m, n| {
            self.attribute_index(n.as_ref())
                .map(|i| m | 1 << i)
                .ok_or_else(|| FcaError::UnknownMember(n.as_ref().to_string()))
        })
    }

    pub fn object_mask(&self, labels: &[ActivityLabel]) -> Result<u64, FcaError> {
        labels.iter().try_fold(0u64, |m, l| {
            self.object_index(*l)
                .map(|i| m | 1 << i)
                .ok_or_else(|| FcaError::UnknownMember(l.to_string()))
        })
    }

    pub fn attribute_names(&self, m: u64) -> Vec<String> {
        bits(m).map(|i| self.attributes[i].name.clone()).collect()
    }

    pub fn object_names(&self, m: u64) -> Vec<ActivityLabel> {
        bits(m).map(|i| self.objects[i]).collect()
    }

    /// Derivation operator by name: objects map to their common attributes,
    /// attributes map to the objects having all of them.
    pub fn derive(&self, side: Side, members: &[String]) -> Result<Vec<String>, FcaError> {
        match side {
            Side::Objects => {
                let labels = members
                    .iter()
                    .map(|m| m.parse::<ActivityLabel>().map_err(|_| FcaError::UnknownMember(m.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                let ext = self.object_mask(&labels)?;
                Ok(self.attribute_names(self.intent_of(ext)))
            }
            Side::Attributes => {
                let int = self.attribute_mask(members)?;
                Ok(self
                    .object_names(self.extent_of(int))
                    .into_iter()
                    .map(|l| l.to_string())
                    .collect())
            }
        }
    }

    /// Stable identity used to reject lattices built from mixed tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for o in &self.objects {
            eat(o.as_str().as_bytes());
            eat(&[0]);
        }
        for a in &self.attributes {
            eat(a.name.as_bytes());
            eat(&[0]);
        }
        for r in &self.rows {
            eat(&r.to_le_bytes());
        }
        h
    }

    /// Parses `activity,<attr> (<Kind>),...` with 0/1 cells.
    pub fn from_csv(text: &str) -> Result<Self, FcaError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| FcaError::Parse { line: 1, reason: e.to_string() })?
            .clone();
        let mut attributes = Vec::new();
        for h in headers.iter().skip(1) {
            let (name, kind) = match h.rsplit_once('(') {
                Some((n, k)) if k.ends_with(')') => (n.trim(), k.trim_end_matches(')').parse()?),
                _ => (h, AttributeKind::Experiential),
            };
            attributes.push(AttributeTag::new(name, kind));
        }
        let mut objects = Vec::new();
        let mut relation = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| FcaError::Parse { line, reason: e.to_string() })?;
            let label: ActivityLabel = rec[0]
                .parse()
                .map_err(|_| FcaError::Parse { line, reason: format!("unknown activity {:?}", &rec[0]) })?;
            let row = rec
                .iter()
                .skip(1)
                .map(|c| match c {
                    "1" => Ok(true),
                    "0" | "" => Ok(false),
                    other => Err(FcaError::Parse { line, reason: format!("cell {other:?} is not 0 or 1") }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            objects.push(label);
            relation.push(row);
        }
        CrossTable::new(objects, attributes, &relation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("activity");
        for a in &self.attributes {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (o, r) in self.objects.iter().zip(&self.rows) {
            out.push_str(o.as_str());
            for j in 0..self.attributes.len() {
                out.push_str(if r >> j & 1 == 1 { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Table 2's three-row cross table.
pub fn table2() -> CrossTable {
    use ActivityLabel::*;
    CrossTable::new(
        vec![Working, UsingToilet, Commuting],
        vec![
            AttributeTag::new("Walking", AttributeKind::Experiential),
            AttributeTag::new("Medium time-duration", AttributeKind::Temporal),
            AttributeTag::new("Work", AttributeKind::Spatial),
        ],
        &[
            vec![false, true, true],
            vec![true, false, true],
            vec![true, true, false],
        ],
    )
    .expect("table 2 is well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormalConcept {
    pub extent: u64,
    pub intent: u64,
    pub table: u64,
}

impl FormalConcept {
    pub fn extent_len(&self) -> u32 {
        self.extent.count_ones()
    }

    pub fn intent_len(&self) -> u32 {
        self.intent.count_ones()
    }
}

fn lex_key(m: u64) -> Vec<usize> {
    bits(m).collect()
}

/// All formal concepts via NextClosure over the attribute side, ordered by
/// extent size and then lexicographically by extent members.
pub fn enumerate_concepts(table: &CrossTable) -> Result<Vec<FormalConcept>, FcaError> {
    let n = table.attributes.len();
    if n > MAX_SIDE || table.objects.len() > MAX_SIDE {
        return Err(FcaError::TableTooLarge {
            objects: table.objects.len(),
            attributes: n,
        });
    }
    let close = |y: u64| table.intent_of(table.extent_of(y));
    let full = table.all_attributes();
    let fp = table.fingerprint();
    let mut intents = Vec::new();
    let mut a = close(0);
    loop {
        intents.push(a);
        if a == full {
            break;
        }
        let mut next = None;
        for i in (0..n).rev() {
            let bit = 1u64 << i;
            if a & bit != 0 {
                continue;
            }
            let below = bit - 1;
            let c = close((a & below) | bit);
            if c & below == a & below {
                next = Some(c);
                break;
            }
        }
        match next {
            Some(c) => a = c,
            None => break,
        }
    }
    let mut concepts: Vec<FormalConcept> = intents
        .into_iter()
        .map(|y| FormalConcept {
            extent: table.extent_of(y),
            intent: y,
            table: fp,
        })
        .collect();
    concepts.sort_by(|x, y| {
        x.extent_len()
            .cmp(&y.extent_len())
            .then_with(|| lex_key(x.extent).cmp(&lex_key(y.extent)))
    });
    Ok(concepts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptLattice {
    pub concepts: Vec<FormalConcept>,
    /// `(i, j)` when concept `i` is below or equal to concept `j`.
    pub order: Vec<(usize, usize)>,
    /// Covering pairs only, for drawing.
    pub cover: Vec<(usize, usize)>,
}

pub fn build_lattice(concepts: Vec<FormalConcept>) -> Result<ConceptLattice, FcaError> {
    if let Some(first) = concepts.first() {
        if concepts.iter().any(|c| c.table != first.table) {
            return Err(FcaError::MixedTables);
        }
    }
    let leq = |a: &FormalConcept, b: &FormalConcept| a.extent & !b.extent == 0;
    let n = concepts.len();
    let mut order = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if leq(&concepts[i], &concepts[j]) {
                order.push((i, j));
            }
        }
    }
    let mut cover = Vec::new();
    for &(i, j) in &order {
        if i == j {
            continue;
        }
        let between = (0..n).any(|k| {
            k != i && k != j && leq(&concepts[i], &concepts[k]) && leq(&concepts[k], &concepts[j])
        });
        if !between {
            cover.push((i, j));
        }
    }
    Ok(ConceptLattice { concepts, order, cover })
}

impl ConceptLattice {
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.concepts[i].extent & !self.concepts[j].extent == 0
    }

    /// Dump consumed by the lattice view: named extents and intents plus
    /// covering edges.
    pub fn to_json(&self, table: &CrossTable) -> serde_json::Value {
        let concepts: Vec<serde_json::Value> = self
            .concepts
            .iter()
            .map(|c| {
                serde_json::json!({
                    "extent": table.object_names(c.extent).iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                    "intent": table.attribute_names(c.intent),
                })
            })
            .collect();
        serde_json::json!({ "concepts": concepts, "edges": self.cover })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive oracle: close every attribute subset and collect the
    /// distinct (extent, intent) pairs.
    pub(crate) fn oracle(t: &CrossTable) -> BTreeSet<(u64, u64)> {
        let n = t.attributes.len();
        let mut out = BTreeSet::new();
        for y in 0..(1u64 << n) {
            let mut ext = 0u64;
            for (i, r) in t.rows.iter().enumerate() {
                if r & y == y {
                    ext |= 1 << i;
                }
            }
            let mut int = (1u64 << n) - 1;
            for (i, r) in t.rows.iter().enumerate() {
                if ext >> i & 1 == 1 {
                    int &= r;
                }
            }
            out.insert((ext, int));
        }
        out
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn table2_derivations() {
        let t = table2();
        assert_eq!(
            t.derive(Side::Objects, &s(&["Working"])).unwrap(),
            s(&["Medium time-duration", "Work"])
        );
        assert_eq!(
            t.derive(Side::Objects, &[]).unwrap(),
            s(&["Walking", "Medium time-duration", "Work"])
        );
        assert_eq!(t.derive(Side::Attributes, &s(&["Walking", "Work"])).unwrap(), s(&["Using toilet"]));
        assert!(matches!(
            t.derive(Side::Attributes, &s(&["Flying"])),
            Err(FcaError::UnknownMember(_))
        ));
    }

    #[test]
    fn table2_has_eight_concepts() {
        let t = table2();
        let c = enumerate_concepts(&t).unwrap();
        assert_eq!(c.len(), 8);
        let got: BTreeSet<_> = c.iter().map(|c| (c.extent, c.intent)).collect();
        assert_eq!(got, oracle(&t));
        let named: Vec<(Vec<ActivityLabel>, Vec<String>)> = c
            .iter()
            .map(|c| (t.object_names(c.extent), t.attribute_names(c.intent)))
            .collect();
        use ActivityLabel::*;
        assert_eq!(named[0], (vec![], s(&["Walking", "Medium time-duration", "Work"])));
        assert_eq!(named[1], (vec![Working], s(&["Medium time-duration", "Work"])));
        assert_eq!(named[7], (vec![Working, UsingToilet, Commuting], vec![]));
        let lat = build_lattice(c).unwrap();
        let wk = named.iter().position(|n| n.0 == vec![Working]).unwrap();
        let wc = named.iter().position(|n| n.0 == vec![Working, Commuting]).unwrap();
        assert!(lat.leq(wk, wc));
        for i in 0..8 {
            assert!(lat.leq(i, 7));
        }
    }

    #[test]
    fn degenerate_tables() {
        let attrs: Vec<AttributeTag> = ["a", "b", "c"].iter().map(|n| AttributeTag::new(n, AttributeKind::Temporal)).collect();
        let objs = vec![ActivityLabel::Still, ActivityLabel::Walking];
        let empty = CrossTable::new(objs.clone(), attrs.clone(), &[vec![false; 3], vec![false; 3]]).unwrap();
        let c = enumerate_concepts(&empty).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].extent, c[0].intent), (0, 0b111));
        assert_eq!((c[1].extent, c[1].intent), (0b11, 0));
        let full = CrossTable::new(objs, attrs, &[vec![true; 3], vec![true; 3]]).unwrap();
        let c = enumerate_concepts(&full).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].extent, c[0].intent), (0b11, 0b111));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let t = table2();
        let back = CrossTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(CrossTable::from_csv("activity,a\nFlying,1\n").is_err());
        assert!(CrossTable::from_csv("activity,a\nWorking,2\n").is_err());
        assert!(matches!(
            CrossTable::from_csv("activity,a,a\nWorking,1,0\n"),
            Err(FcaError::Duplicate)
        ));
    }

    #[test]
    fn mixed_tables_rejected() {
        let mut c = enumerate_concepts(&table2()).unwrap();
        let other = CrossTable::new(
            vec![ActivityLabel::Still],
            vec![AttributeTag::new("x", AttributeKind::Spatial)],
            &[vec![true]],
        )
        .unwrap();
        c.extend(enumerate_concepts(&other).unwrap());
        assert_eq!(build_lattice(c), Err(FcaError::MixedTables));
    }

    #[test]
    fn json_dump_names_members() {
        let t = table2();
        let lat = build_lattice(enumerate_concepts(&t).unwrap()).unwrap();
        let j = lat.to_json(&t);
        assert_eq!(j["concepts"].as_array().unwrap().len(), 8);
        assert_eq!(j["concepts"][1]["extent"][0], "Working");
        assert!(!j["edges"].as_array().unwrap().is_empty());
    }

    pub(crate) fn random_table(rng: &mut ChaCha8Rng) -> CrossTable {
        let no = rng.gen_range(1..=8);
        let na = rng.gen_range(1..=8);
        let density = rng.gen_range(0.1..0.9);
        let objs = ActivityLabel::ALL[..no].to_vec();
        let attrs = (0..na).map(|i| AttributeTag::new(&format!("a{i}"), AttributeKind::Experiential)).collect();
        let rel: Vec<Vec<bool>> = (0..no).map(|_| (0..na).map(|_| rng.gen_bool(density)).collect()).collect();
        CrossTable::new(objs, attrs, &rel).unwrap()
    }

    #[test]
    fn random_tables_match_oracle_and_are_antitone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let t = random_table(&mut rng);
            let c = enumerate_concepts(&t).unwrap();
            let got: BTreeSet<_> = c.iter().map(|c| (c.extent, c.intent)).collect();
            assert_eq!(got.len(), c.len());
            assert_eq!(got, oracle(&t));
            for a in &c {
                for b in &c {
                    let ext_sub = a.extent & !b.extent == 0;
                    let int_sup = b.intent & !a.intent == 0;
                    assert_eq!(ext_sub, int_sup);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn double_derivation_is_a_closure(seed in any::<u64>(), sub in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_table(&mut rng);
            let s_obj = sub & t.all_objects();
            let cl = t.extent_of(t.intent_of(s_obj));
            prop_assert_eq!(cl & s_obj, s_obj);
            prop_assert_eq!(t.extent_of(t.intent_of(cl)), cl);
            let s_att = (sub >> 8) & t.all_attributes();
            let cl = t.intent_of(t.extent_of(s_att));
            prop_assert_eq!(cl & s_att, s_att);
            prop_assert_eq!(t.intent_of(t.extent_of(cl)), cl);
        }
    }
}
