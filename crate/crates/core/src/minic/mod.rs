//! The MiniC language: syntax tree, parser, printer, checker, and IR.

pub mod ast;
pub mod diag;
pub mod edit;
pub mod ir;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod printer;
pub mod typeck;

pub use ast::*;
pub use diag::{Diagnostic, DiagnosticKind, Diagnostics};
pub use edit::{align_unit, delete_stmts, replace_function, shape_eq, EditError};
pub use ir::IrModule;
pub use lower::{lower, LowerError};
pub use parser::{parse_function, parse_untyped};
pub use printer::{print_function, print_unit};
pub use typeck::typecheck;

/// Parse and type-check a complete program.
pub fn parse(src: &str, source_name: &str) -> Result<SourceUnit, Diagnostics> {
    let unit = parse_untyped(src, source_name)?;
    typecheck(&unit)?;
    Ok(unit)
}

/// Parse and check a program read from disk.
pub fn parse_file(path: &std::path::Path) -> Result<SourceUnit, ParseFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseFileError::Io(path.display().to_string(), e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    // Corpus programs are stored as `<program>/program.mc`; name them after
    // the directory so reports stay readable.
    let name = if name == "program" {
        path.parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(name)
    } else {
        name
    };
    parse(&text, &name).map_err(ParseFileError::Diagnostics)
}

#[derive(Debug, thiserror::Error)]
pub enum ParseFileError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Diagnostics(Diagnostics),
}

#[cfg(test)]
mod tests {
    use super::ir::Instr;
    use super::*;

    const ISSPACE: &str = "int c_isspace(int c) {
    int tmp;
    switch (c) {
    case 32: tmp = 1; break;
    case 10: tmp = 1; break;
    case 11: tmp = 1; break;
    case 12:
    case 13: tmp = 1; break;
    default: tmp = 0; break;
    case 9: tmp = 1;
    }
    return tmp;
}
int main() { return c_isspace(getc()); }
";

    #[test]
    fn minimal_program_has_one_statement() {
        let u = parse("int main(){return 0;}", "m").unwrap();
        assert_eq!(u.functions.len(), 1);
        assert_eq!(u.size(), 1);
    }

    #[test]
    fn unclosed_body_is_a_syntax_error_on_line_one() {
        let e = parse("int main(){return", "m").unwrap_err();
        assert_eq!(e.first().kind, DiagnosticKind::Syntax);
        assert_eq!(e.first().line, 1);
    }

    #[test]
    fn isspace_fixture_has_21_statements() {
        let u = parse(ISSPACE, "isspace").unwrap();
        assert_eq!(u.function("c_isspace").unwrap().size(), 21);
    }

    #[test]
    fn duplicate_function_is_reported() {
        let e = parse("int f(){return 0;} int f(){return 1;} int main(){return 0;}", "d").unwrap_err();
        assert_eq!(e.first().kind, DiagnosticKind::DuplicateFunction);
    }

    #[test]
    fn print_round_trips() {
        let u = parse(ISSPACE, "isspace").unwrap();
        let text = print_unit(&u);
        let again = parse(&text, "isspace").unwrap();
        assert_eq!(print_unit(&again), text);
        assert_eq!(again.size(), u.size());
    }

    #[test]
    fn printed_line_count_matches_statement_count() {
        let u = parse(ISSPACE, "isspace").unwrap();
        let printed = printer::print_unit_mapped(&u);
        let counted = u.counted_stmt_ids();
        for id in &counted {
            assert!(printed.lines.contains_key(id));
        }
    }

    #[test]
    fn null_statement_prints_alone() {
        let u = parse("int main() { ; return 0; }", "n").unwrap();
        assert!(print_unit(&u).lines().any(|l| l.trim() == ";"));
    }

    #[test]
    fn return_zero_lowers_to_const_and_return() {
        let u = parse("int main() { return 0; }", "r").unwrap();
        let ir = lower(&u).unwrap();
        let f = &ir.functions[0];
        assert_eq!(
            &f.instrs[..2],
            &[
                Instr::LoadConst { dst: 0, value: 0 },
                Instr::Return { src: Some(0) }
            ]
        );
    }

    #[test]
    fn empty_void_function_is_a_single_return() {
        let u = parse("void f() { } int main() { f(); return 0; }", "v").unwrap();
        let ir = lower(&u).unwrap();
        assert_eq!(ir.functions[0].instrs, vec![Instr::Return { src: None }]);
    }

    #[test]
    fn lowering_is_deterministic() {
        let u = parse(ISSPACE, "isspace").unwrap();
        assert_eq!(lower(&u).unwrap().encode(), lower(&u).unwrap().encode());
    }

    #[test]
    fn every_counted_statement_owns_an_instruction() {
        let u = parse(ISSPACE, "isspace").unwrap();
        let ir = lower(&u).unwrap();
        let owned: std::collections::BTreeSet<_> = ir
            .functions
            .iter()
            .flat_map(|f| f.owners.iter().flatten().copied())
            .collect();
        for id in u.counted_stmt_ids() {
            assert!(owned.contains(&id), "{id} owns nothing");
        }
    }

    #[test]
    fn one_statement_replacement_drops_size_by_20() {
        let u = parse(ISSPACE, "isspace").unwrap();
        let (f, _) = parse_function(
            "int c_isspace(int c) { return c == 32 || c == 9 || c == 10 || c == 11 || c == 12 || c == 13; }",
            0,
        )
        .unwrap();
        let r = replace_function(&u, "c_isspace", &f).unwrap();
        assert_eq!(u.size() - r.size(), 20);
    }

    #[test]
    fn replacement_with_undeclared_variable_fails_typecheck() {
        let u = parse(ISSPACE, "isspace").unwrap();
        let (f, _) = parse_function("int c_isspace(int c) { return zz; }", 0).unwrap();
        let r = replace_function(&u, "c_isspace", &f).unwrap();
        assert!(typecheck(&r).is_err());
    }
}
