use std::collections::BTreeSet;

use super::{Suggestion, SuggestionContext, SuggestionKind, MAX_CONCEPTS, MAX_PER_KIND};
use crate::graph::{GraphError, GraphView};

/// Compares the user's graph with the project graph around their main
/// concepts.
///
/// `others` holds the user graphs of the remaining project members. When
/// both graphs agree on the main concepts and on every main concept's
/// neighborhood a single [`SuggestionKind::AllIsWell`] is returned.
pub fn completeness_suggestions(
    ctx: &SuggestionContext,
    user: &GraphView,
    project: &GraphView,
    others: &[GraphView],
) -> Result<Vec<Suggestion>, GraphError> {
    let main_p = project.top_concepts(ctx.top_n)?;
    let main_u = if user.is_empty() { Vec::new() } else { user.top_concepts(ctx.top_n)? };
    let set_p: BTreeSet<&str> = main_p.iter().map(String::as_str).collect();
    let set_u: BTreeSet<&str> = main_u.iter().map(String::as_str).collect();

    let around = |g: &GraphView, m: &str| -> Result<BTreeSet<String>, GraphError> {
        if !g.contains(m) {
            return Ok(BTreeSet::new());
        }
        Ok(g.neighborhood(m, ctx.max_depth)?.concepts().into_iter().map(str::to_owned).collect())
    };
    let mut near_p = Vec::new();
    let mut near_u = Vec::new();
    for m in &main_p {
        near_p.push(around(project, m)?);
        near_u.push(around(user, m)?);
    }

    let same_main = set_u == set_p;
    if same_main && near_p == near_u {
        return Ok(vec![Suggestion::new(
            ctx,
            SuggestionKind::AllIsWell,
            "Your stories cover the team's main concepts and everything around them.".to_owned(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
        )]);
    }

    let pick = |keys: &mut dyn Iterator<Item = &str>| -> Vec<String> {
        let keys: BTreeSet<&str> = keys.collect();
        project
            .rank(keys)
            .into_iter()
            .take(MAX_CONCEPTS)
            .map(str::to_owned)
            .collect()
    };
    let emit = |kind, message: String, concepts: Vec<String>| Suggestion::new(ctx, kind, message, concepts, Vec::new(), Vec::new());
    let mut out = Vec::new();

    if same_main {
        let mut n = 0;
        for (i, m) in main_p.iter().enumerate() {
            let concepts = pick(&mut near_p[i].difference(&near_u[i]).map(String::as_str));
            if !concepts.is_empty() && n < MAX_PER_KIND {
                n += 1;
                out.push(emit(
                    SuggestionKind::CloseToCompleteness,
                    format!("You share the team's main concepts. Around \"{m}\" you could still cover: {}.", concepts.join(", ")),
                    concepts,
                ));
            }
        }
    }

    let missing_main = pick(&mut set_p.difference(&set_u).copied());
    if !missing_main.is_empty() {
        out.push(emit(
            SuggestionKind::PopZero,
            format!("Central to the team but rare in your stories: {}.", missing_main.join(", ")),
            missing_main,
        ));
    }

    let mut per_root = |kind: SuggestionKind, roots: &[&str], keep: &dyn Fn(&str) -> bool, text: &dyn Fn(&str, &str) -> String| -> Result<(), GraphError> {
        let mut n = 0;
        for m in roots {
            if n == MAX_PER_KIND {
                break;
            }
            let near = around(project, m)?;
            let concepts = pick(&mut near.iter().map(String::as_str).filter(|c| keep(c)));
            if !concepts.is_empty() {
                n += 1;
                let message = text(m, &concepts.join(", "));
                out.push(emit(kind, message, concepts));
            }
        }
        Ok(())
    };

    let roots_p: Vec<&str> = main_p.iter().map(String::as_str).collect();
    per_root(
        SuggestionKind::PopOne,
        &roots_p,
        &|c| !user.contains(c),
        &|m, list| format!("Near the team's main concept \"{m}\", absent from your stories: {list}."),
    )?;
    let only_mine = |c: &str| {
        let authors = project.authors_of(c);
        !authors.is_empty() && authors.iter().all(|a| **a == ctx.user)
    };
    per_root(
        SuggestionKind::PopTwo,
        &roots_p,
        &only_mine,
        &|m, list| format!("Near the team's main concept \"{m}\", only you have written about: {list}."),
    )?;
    let roots_u: Vec<&str> = main_u.iter().map(String::as_str).filter(|m| !set_p.contains(m)).collect();
    let only_theirs = |c: &str| {
        let authors = project.authors_of(c);
        !authors.is_empty() && authors.iter().all(|a| **a != ctx.user)
    };
    per_root(
        SuggestionKind::PopThree,
        &roots_u,
        &only_theirs,
        &|m, list| format!("Teammates connect your concept \"{m}\" with: {list}."),
    )?;

    let mine = user.isolated_concepts();
    let mut lonely: BTreeSet<String> = BTreeSet::new();
    for g in others {
        lonely.extend(g.isolated_concepts().into_iter().filter(|c| !mine.contains(c)));
    }
    let lucky: Vec<String> = rank_any(project, &lonely).into_iter().take(MAX_CONCEPTS).collect();
    if !lucky.is_empty() {
        out.push(emit(
            SuggestionKind::FeelingLucky,
            format!("Loose ends from teammates that might spark a story: {}.", lucky.join(", ")),
            lucky,
        ));
    }
    Ok(out)
}

/// Ranks by the project graph, placing concepts it lacks last by key.
fn rank_any(project: &GraphView, keys: &BTreeSet<String>) -> Vec<String> {
    let (known, unknown): (Vec<&str>, Vec<&str>) = keys.iter().map(String::as_str).partition(|k| project.contains(k));
    project
        .rank(known)
        .into_iter()
        .chain(unknown)
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Scope;

    fn g(scope: Scope, edges: &[(&'static str, &'static str)]) -> GraphView {
        GraphView::from_edges(scope, [], edges.iter().copied())
    }

    fn kinds(s: &[Suggestion]) -> Vec<SuggestionKind> {
        s.iter().map(|s| s.kind).collect()
    }

    #[test]
    fn identical_graphs_are_all_well() {
        let edges = [("menu", "price"), ("menu", "item"), ("table", "table")];
        let ctx = SuggestionContext::new("p", "u");
        let got = completeness_suggestions(&ctx, &g(Scope::user("u", "p"), &edges), &g(Scope::project("p"), &edges), &[]).unwrap();
        assert_eq!(kinds(&got), [SuggestionKind::AllIsWell]);
    }

    #[test]
    fn missing_child_is_close_to_completeness() {
        let ctx = SuggestionContext::new("p", "u");
        let user = g(Scope::user("u", "p"), &[("menu", "price"), ("item", "item")]);
        let project = g(Scope::project("p"), &[("menu", "price"), ("menu", "item")]);
        let got = completeness_suggestions(&ctx, &user, &project, &[]).unwrap();
        assert_eq!(got[0].kind, SuggestionKind::CloseToCompleteness);
        assert_eq!(got[0].concepts, ["item"]);
        assert!(!kinds(&got).contains(&SuggestionKind::PopZero));
    }

    #[test]
    fn empty_project_is_an_error() {
        let ctx = SuggestionContext::new("p", "u");
        let empty = GraphView::empty(Scope::project("p"));
        assert_eq!(
            completeness_suggestions(&ctx, &GraphView::empty(Scope::user("u", "p")), &empty, &[]),
            Err(GraphError::EmptyGraph)
        );
    }
}
