//! Surface-syntax rendering of types (the same notation the parser accepts).

use std::fmt::{self, Display, Formatter};

use super::{GlobalType, LocalType, Sort};

fn write_branches<T: Display>(f: &mut Formatter<'_>, branches: &[(Sort, T)]) -> fmt::Result {
    if let [(sort, cont)] = branches {
        return write!(f, "{sort} . {cont}");
    }
    f.write_str("{ ")?;
    for (i, (sort, cont)) in branches.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{sort} . {cont}")?;
    }
    f.write_str(" }")
}

impl Display for GlobalType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::Com { from, to, branches } => {
                write!(f, "{from} -> {to} : ")?;
                write_branches(f, branches)
            }
            GlobalType::End => f.write_str("end"),
            GlobalType::Loop { var, body } => write!(f, "rec {var} . {body}"),
            GlobalType::Recur { var } => write!(f, "{var}"),
        }
    }
}

impl Display for LocalType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LocalType::Send { from, to, branches } => {
                write!(f, "{from} -> {to} ! ")?;
                write_branches(f, branches)
            }
            LocalType::Recv { from, to, branches } => {
                write!(f, "{from} -> {to} ? ")?;
                write_branches(f, branches)
            }
            LocalType::End => f.write_str("end"),
            LocalType::Loop { var, body } => write!(f, "rec {var} . {body}"),
            LocalType::Recur { var } => write!(f, "{var}"),
        }
    }
}

/// Renders only the head action of a local type, e.g. `B -> A ! {Accept, Reject}`.
pub fn head_fragment(l: &LocalType) -> String {
    let sorts = |bs: &[(Sort, LocalType)]| {
        let names: Vec<&str> = bs.iter().map(|(s, _)| s.name.as_str()).collect();
        if names.len() == 1 {
            names[0].to_string()
        } else {
            format!("{{{}}}", names.join(", "))
        }
    };
    match l {
        LocalType::Send { from, to, branches } => format!("{from} -> {to} ! {}", sorts(branches)),
        LocalType::Recv { from, to, branches } => format!("{from} -> {to} ? {}", sorts(branches)),
        LocalType::End => "end".to_string(),
        LocalType::Loop { var, .. } => format!("rec {var} . ..."),
        LocalType::Recur { var } => var.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_single_and_multi_branches() {
        let l = LocalType::send(
            "B",
            "A",
            vec![(Sort::unit("Accept"), LocalType::End), (Sort::unit("Reject"), LocalType::var("X"))],
        );
        assert_eq!(l.to_string(), "B -> A ! { Accept . end, Reject . X }");
        assert_eq!(head_fragment(&l), "B -> A ! {Accept, Reject}");
        let g = GlobalType::rec("X", GlobalType::com("A", "B", vec![(Sort::int("Propose"), GlobalType::var("X"))]));
        assert_eq!(g.to_string(), "rec X . A -> B : Propose . X");
    }
}
