//! Dependency marks shared by both interpreters.
//!
//! A mark is a trace site label together with its classification. The
//! unclassified `trace(e)` uses the default mode and an auto class, so one
//! triple shape covers both plain and classified marks.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{ClassId, Label, Mode};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mark {
    pub label: Label,
    pub mode: Mode,
    pub class: ClassId,
}

impl Mark {
    pub fn new(label: Label, mode: Mode, class: ClassId) -> Self {
        Mark { label, mode, class }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{{{},{}}}", self.label, self.mode, self.class)
    }
}

/// A finite set of marks. Join is set union, the empty set is the unit.
///
/// Used both as the concrete annotation `κ` and the abstract dependency
/// component `D`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marks(BTreeSet<Mark>);

pub type MarkSet = Marks;
pub type DepSet = Marks;

impl Marks {
    pub fn new() -> Self {
        Marks(BTreeSet::new())
    }

    pub fn singleton(m: Mark) -> Self {
        let mut s = BTreeSet::new();
        s.insert(m);
        Marks(s)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mark> {
        self.0.iter()
    }

    pub fn insert(&mut self, m: Mark) {
        self.0.insert(m);
    }

    pub fn contains(&self, m: &Mark) -> bool {
        self.0.contains(m)
    }

    /// Whether any mark carries `label`, in any mode or class.
    pub fn mentions(&self, label: Label) -> bool {
        self.0.iter().any(|m| m.label == label)
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.0.iter().map(|m| m.label).collect()
    }

    pub fn join(&self, other: &Marks) -> Marks {
        if other.0.is_empty() {
            return self.clone();
        }
        if self.0.is_empty() {
            return other.clone();
        }
        Marks(self.0.union(&other.0).cloned().collect())
    }

    pub fn join_with(&mut self, other: &Marks) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn is_subset(&self, other: &Marks) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Rewrites every mark in mode `from` with class `class` to mode `to`.
    pub fn reclassify(&self, from: &Mode, to: &Mode, class: &ClassId) -> Marks {
        Marks(
            self.0
                .iter()
                .map(|m| {
                    if m.mode == *from && m.class == *class {
                        Mark::new(m.label, to.clone(), m.class.clone())
                    } else {
                        m.clone()
                    }
                })
                .collect(),
        )
    }
}

impl FromIterator<Mark> for Marks {
    fn from_iter<I: IntoIterator<Item = Mark>>(iter: I) -> Self {
        Marks(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Marks {
    type Item = &'a Mark;
    type IntoIter = std::collections::btree_set::Iter<'a, Mark>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Marks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Span;

    fn mark(id: u32, mode: &str, class: &str) -> Mark {
        Mark::new(
            Label::new(id, Span::default()),
            Mode::new(mode),
            ClassId::new(class).unwrap(),
        )
    }

    #[test]
    fn reclassify_only_touches_matching_mode_and_class() {
        let m: Marks = [
            mark(1, "T", "#DOM"),
            mark(2, "T", "other"),
            mark(3, "S", "#DOM"),
        ]
        .into_iter()
        .collect();
        let r = m.reclassify(
            &Mode::new("T"),
            &Mode::new("S"),
            &ClassId::new("#DOM").unwrap(),
        );
        let expected: Marks = [
            mark(1, "S", "#DOM"),
            mark(2, "T", "other"),
            mark(3, "S", "#DOM"),
        ]
        .into_iter()
        .collect();
        assert_eq!(r, expected);
    }

    #[test]
    fn join_is_union() {
        let a = Marks::singleton(mark(1, "T", "a"));
        let b = Marks::singleton(mark(2, "T", "b"));
        let j = a.join(&b);
        assert!(a.is_subset(&j) && b.is_subset(&j));
        assert_eq!(j.len(), 2);
        assert_eq!(j.join(&j), j);
    }
}
