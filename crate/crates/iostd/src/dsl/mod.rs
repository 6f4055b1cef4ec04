//! Concrete textual syntax for behavior descriptions (`.iostd` files) and
//! run manifests, with a parser that reports precise source locations and
//! recovers to collect several errors per file.

mod lexer;
mod manifest;
mod parser;
mod printer;
mod span;

pub use manifest::{
    parse_manifest, InjectDecl, ManifestDoc, ObjectDecl, PolicyDecl, SchedulerDecl,
};
pub use printer::print;
pub use span::{ParseError, SourceSpan};

use crate::spec::BehaviorDescription;

/// Parse one behavior description.
///
/// On success the tree is structurally sound: initial states are
/// nonempty and declared, transition endpoints resolve, and bare names
/// that denote declared enum constants are resolved into literals.
pub fn parse(text: &str) -> Result<BehaviorDescription, Vec<ParseError>> {
    parser::Parser::new(text)?.behavior()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{validate, Callable, Domain, Expr, OutputKind};

    #[test]
    fn the_bank_corpus_declares_exactly_the_five_services() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/bank.iostd");
        let beh = parse(&std::fs::read_to_string(path).unwrap()).unwrap();
        let names: Vec<&str> = beh.services.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            vec!["create", "delete", "deposit", "withdraw", "transfer"]
        );
        assert!(validate(&beh).is_clean());
    }

    #[test]
    fn empty_input_reports_expected_behavior() {
        let errs = parse("").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].to_string().contains("`behavior`"));
    }

    #[test]
    fn parses_a_small_behavior() {
        let text = r#"
-- a one-service counter
behavior Counter {
  attributes {
    n : int 0..3;
  }
  init { n == 0 }
  service bump(d : int 1..2) callable both {
    states {
      S: n >= 0;
    }
    initial S;
    trans S -> S {
      when bump(d) from c;
      pre n + d <= 3;
      post n' == n + d;
      out c.ret() seq;
    }
  }
}
"#;
        let beh = parse(text).unwrap();
        assert_eq!(beh.name, "Counter");
        assert_eq!(beh.services.len(), 1);
        let svc = &beh.services[0];
        assert_eq!(svc.callable, Callable::Both);
        assert_eq!(svc.params[0].domain, Domain::Int { lo: 1, hi: 2 });
        assert_eq!(svc.transitions[0].outputs[0].kind, OutputKind::Ret);
        assert!(validate(&beh).is_clean());
    }

    #[test]
    fn enum_constants_resolve_to_literals() {
        let text = r#"
behavior Lamp {
  attributes {
    color : enum {Red, Green};
  }
  init { color == Red }
  service set(c0 : enum {Red, Green}) callable both {
    states {
      S: true;
    }
    initial S;
    trans S -> S {
      when set(c0);
      post color' == c0;
      out sender.ret() seq;
    }
  }
}
"#;
        let beh = parse(text).unwrap();
        assert!(matches!(
            &beh.init,
            Expr::Bin(_, _, r) if matches!(&**r, Expr::Lit(crate::kernel::Value::Enum(n)) if n == "Red")
        ));
        assert!(
            validate(&beh).is_clean(),
            "{}",
            validate(&beh).render_lines()
        );
    }

    #[test]
    fn recovers_and_reports_multiple_errors() {
        let text = r#"
behavior Broken {
  attributes {
    n : int 0..;
    m : bool;
  }
  init { n == }
  service s() callable both {
    states { S: true; }
    initial S;
    trans S -> S {
      when s();
      out sender.ret() seq;
    }
  }
}
"#;
        let errs = parse(text).unwrap_err();
        assert!(errs.len() >= 2, "want at least two errors, got {:?}", errs);
    }

    #[test]
    fn error_spans_lie_within_the_input() {
        let text = "behavior B {\n  init { 1 +\n}\n";
        let errs = parse(text).unwrap_err();
        let lines = text.lines().count() as u32;
        for e in errs {
            assert!(e.span.start_line >= 1 && e.span.start_line <= lines + 1);
        }
    }

    #[test]
    fn print_then_parse_is_identity_on_the_counter() {
        let text = r#"
behavior Counter {
  attributes { n : int 0..3; }
  init { n == 0 }
  service bump(d : int 1..2) callable both {
    states { S: n >= 0; }
    initial S;
    trans S -> S {
      when bump(d) from c;
      pre n + d <= 3 && (n > 0 || d != 2);
      post n' == n + d;
      out c.ret() seq;
    }
  }
}
"#;
        let beh = parse(text).unwrap();
        let printed = print(&beh);
        let reparsed =
            parse(&printed).unwrap_or_else(|e| panic!("reparse failed: {:?}\n{}", e, printed));
        assert_eq!(beh, reparsed);
        // Printing is deterministic.
        assert_eq!(printed, print(&reparsed));
    }
}
