//! Exhaustive enumeration over declared finite domains.

use crate::kernel::VarAssignment;

use super::ast::{BehaviorDescription, Domain};

/// Iterator over all assignments of the given variables, odometer style:
/// the last variable varies fastest, each domain in its canonical order.
pub struct Assignments {
    decls: Vec<(String, Vec<crate::kernel::Value>)>,
    indices: Vec<usize>,
    done: bool,
}

impl Assignments {
    fn new(decls: &[(String, Domain)]) -> Self {
        let decls: Vec<_> = decls
            .iter()
            .map(|(name, domain)| (name.clone(), domain.values()))
            .collect();
        let done = decls.iter().any(|(_, values)| values.is_empty());
        let indices = vec![0; decls.len()];
        Assignments {
            decls,
            indices,
            done,
        }
    }
}

impl Iterator for Assignments {
    type Item = VarAssignment;

    fn next(&mut self) -> Option<VarAssignment> {
        if self.done {
            return None;
        }
        let current: VarAssignment = self
            .decls
            .iter()
            .zip(&self.indices)
            .map(|((name, values), &i)| (name.clone(), values[i].clone()))
            .collect();
        // Advance the odometer.
        self.done = true;
        for pos in (0..self.indices.len()).rev() {
            self.indices[pos] += 1;
            if self.indices[pos] < self.decls[pos].1.len() {
                self.done = false;
                break;
            }
            self.indices[pos] = 0;
        }
        Some(current)
    }
}

/// All assignments of the given variables.
pub fn assignments(decls: &[(String, Domain)]) -> Assignments {
    Assignments::new(decls)
}

/// The attribute declarations of a behavior as enumeration input.
pub fn attribute_decls(beh: &BehaviorDescription) -> Vec<(String, Domain)> {
    beh.attributes
        .iter()
        .map(|a| (a.name.clone(), a.domain.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Value;

    #[test]
    fn product_order_is_canonical() {
        let decls = vec![
            ("x".to_string(), Domain::Int { lo: 0, hi: 1 }),
            ("y".to_string(), Domain::Bool),
        ];
        let all: Vec<String> = assignments(&decls).map(|a| a.to_string()).collect();
        assert_eq!(
            all,
            vec![
                "{x:0,y:false}",
                "{x:0,y:true}",
                "{x:1,y:false}",
                "{x:1,y:true}"
            ]
        );
    }

    #[test]
    fn empty_variable_list_yields_one_empty_assignment() {
        let all: Vec<_> = assignments(&[]).collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_empty());
    }

    #[test]
    fn empty_domain_yields_nothing() {
        let decls = vec![("x".to_string(), Domain::Enum(vec![]))];
        assert_eq!(assignments(&decls).count(), 0);
    }

    #[test]
    fn counts_multiply() {
        let decls = vec![
            ("a".to_string(), Domain::Int { lo: 0, hi: 8 }),
            ("b".to_string(), Domain::Bool),
            (
                "c".to_string(),
                Domain::Enum(vec!["r".into(), "g".into(), "b".into()]),
            ),
        ];
        assert_eq!(assignments(&decls).count(), 9 * 2 * 3);
        let _ = Value::Int(0);
    }
}
