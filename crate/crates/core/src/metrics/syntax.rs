//! Syntactic similarity via tree kernels over shallow parses.
//!
//! Each document is split into sentences and parsed into a constituency-style
//! tree; similarity between documents is the average, in both directions, of
//! each sentence's best normalized tree-kernel match on the other side. The
//! kernel counts common production subtrees (every included node keeps its
//! full child sequence, children optionally expanded) down to the POS level
//! and ignores the words underneath: word choice is the semantic metric's
//! business, this one sees only phrase shape.
//!
//! Parsing is pluggable through [`SyntaxProvider`]. The default
//! [`ShallowParser`] needs no external model: it tags tokens with the bundled
//! rule tagger and groups them with a fixed chunk grammar (NP, VP, PP, ADVP).
//! If a plugged-in provider fails on a sentence, the flat POS sequence is
//! used instead and the outcome is flagged.

use crate::pruning::tagger::{PosTag, PosTagger, RuleTagger};
use crate::text::{sentences, tokens};

/// A parse tree. Leaves carry words; internal nodes carry constituent or POS
/// labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: &str) -> Tree {
        Tree { label: label.to_string(), children: Vec::new() }
    }

    pub fn node(label: &str, children: Vec<Tree>) -> Tree {
        Tree { label: label.to_string(), children }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Total node count, leaves included.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

/// Produces one tree per sentence. Errors are strings because providers may
/// wrap arbitrary external parsers.
pub trait SyntaxProvider {
    fn parse(&self, sentence: &str) -> Result<Tree, String>;
}

/// Default parser: POS tags plus a fixed chunk grammar.
#[derive(Debug, Default, Clone, Copy)]
pub struct ShallowParser;

impl ShallowParser {
    fn noun_phrase(tags: &[PosTag], start: usize) -> Option<usize> {
        // (Det|Adj|Num)* Noun+ or a lone pronoun.
        let mut i = start;
        while i < tags.len() && matches!(tags[i], PosTag::Det | PosTag::Adj | PosTag::Num) {
            i += 1;
        }
        if i < tags.len() && tags[i] == PosTag::Noun {
            while i < tags.len() && tags[i] == PosTag::Noun {
                i += 1;
            }
            return Some(i);
        }
        if start < tags.len() && tags[start] == PosTag::Pron {
            return Some(start + 1);
        }
        None
    }

    fn tag_node(word: &str, tag: PosTag) -> Tree {
        Tree::node(tag.as_str(), vec![Tree::leaf(word)])
    }

    fn phrase(label: &str, words: &[&str], tags: &[PosTag], range: std::ops::Range<usize>) -> Tree {
        let children = range.map(|i| Self::tag_node(words[i], tags[i])).collect();
        Tree::node(label, children)
    }
}

impl SyntaxProvider for ShallowParser {
    fn parse(&self, sentence: &str) -> Result<Tree, String> {
        let words = tokens(sentence);
        if words.is_empty() {
            return Err("no tokens".to_string());
        }
        let tags = RuleTagger.tag_tokens(&words);
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match tags[i] {
                PosTag::Prep => {
                    if let Some(end) = Self::noun_phrase(&tags, i + 1) {
                        let mut children = vec![Self::tag_node(words[i], tags[i])];
                        children.push(Self::phrase("NP", &words, &tags, i + 1..end));
                        chunks.push(Tree::node("PP", children));
                        i = end;
                    } else {
                        chunks.push(Tree::node("X", vec![Self::tag_node(words[i], tags[i])]));
                        i += 1;
                    }
                }
                PosTag::Det | PosTag::Adj | PosTag::Num | PosTag::Noun | PosTag::Pron => {
                    if let Some(end) = Self::noun_phrase(&tags, i) {
                        chunks.push(Self::phrase("NP", &words, &tags, i..end));
                        i = end;
                    } else {
                        chunks.push(Tree::node("X", vec![Self::tag_node(words[i], tags[i])]));
                        i += 1;
                    }
                }
                PosTag::Verb => {
                    let mut end = i;
                    while end < words.len() && tags[end] == PosTag::Verb {
                        end += 1;
                    }
                    chunks.push(Self::phrase("VP", &words, &tags, i..end));
                    i = end;
                }
                PosTag::Adv => {
                    let mut end = i;
                    while end < words.len() && tags[end] == PosTag::Adv {
                        end += 1;
                    }
                    chunks.push(Self::phrase("ADVP", &words, &tags, i..end));
                    i = end;
                }
                PosTag::Conj | PosTag::Other => {
                    chunks.push(Tree::node("X", vec![Self::tag_node(words[i], tags[i])]));
                    i += 1;
                }
            }
        }
        Ok(Tree::node("S", chunks))
    }
}

/// Flat fallback when a provider cannot parse: S over the POS sequence.
fn flat_pos_tree(sentence: &str) -> Tree {
    let words = tokens(sentence);
    let tags = RuleTagger.tag_tokens(&words);
    let children = words
        .iter()
        .zip(&tags)
        .map(|(w, t)| Tree::node(t.as_str(), vec![Tree::leaf(w)]))
        .collect();
    Tree::node("S", children)
}

fn production(node: &Tree) -> Vec<&str> {
    let mut p = vec![node.label.as_str()];
    p.extend(node.children.iter().map(|c| c.label.as_str()));
    p
}

/// A POS node directly over words. These are the kernel's atoms: their
/// labels participate in their parent's production, but the words below
/// them are never compared.
fn is_preterminal(tree: &Tree) -> bool {
    !tree.is_leaf() && tree.children.iter().all(Tree::is_leaf)
}

fn collect_phrasal<'a>(tree: &'a Tree, out: &mut Vec<&'a Tree>) {
    if !tree.is_leaf() && !is_preterminal(tree) {
        out.push(tree);
        for c in &tree.children {
            collect_phrasal(c, out);
        }
    }
}

fn co_rooted(a: &Tree, b: &Tree) -> f64 {
    if production(a) != production(b) {
        return 0.0;
    }
    // Identical productions mean aligned children; preterminal children are
    // atoms, so only phrasal children expand further.
    let mut product = 1.0;
    for (ca, cb) in a.children.iter().zip(&b.children) {
        if !ca.is_leaf() && !is_preterminal(ca) && !is_preterminal(cb) {
            product *= 1.0 + co_rooted(ca, cb);
        }
    }
    product
}

/// Raw production-subtree kernel: the number of common tree fragments,
/// counted with multiplicity. Fragments stop at POS labels; words are
/// invisible.
pub fn tree_kernel(a: &Tree, b: &Tree) -> f64 {
    let mut nodes_a = Vec::new();
    let mut nodes_b = Vec::new();
    collect_phrasal(a, &mut nodes_a);
    collect_phrasal(b, &mut nodes_b);
    let mut total = 0.0;
    for na in &nodes_a {
        for nb in &nodes_b {
            total += co_rooted(na, nb);
        }
    }
    total
}

/// Kernel normalized to [0, 1]: `K(a,b) / sqrt(K(a,a) K(b,b))`.
pub fn normalized_tree_kernel(a: &Tree, b: &Tree) -> f64 {
    let cross = tree_kernel(a, b);
    if cross == 0.0 {
        return 0.0;
    }
    cross / (tree_kernel(a, a) * tree_kernel(b, b)).sqrt()
}

/// Result of a document comparison; `fallback_used` is set when any sentence
/// went through the flat POS fallback instead of the configured provider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntaxScore {
    pub value: f64,
    pub fallback_used: bool,
}

fn parse_document(doc: &str, provider: &dyn SyntaxProvider) -> (Vec<Tree>, bool) {
    let mut fallback = false;
    let trees = sentences(doc)
        .into_iter()
        .map(|s| {
            provider.parse(s).unwrap_or_else(|_| {
                fallback = true;
                flat_pos_tree(s)
            })
        })
        .filter(|t| !t.children.is_empty())
        .collect();
    (trees, fallback)
}

fn directional_mean(from: &[Tree], to: &[Tree]) -> f64 {
    if from.is_empty() || to.is_empty() {
        return 0.0;
    }
    let total: f64 = from
        .iter()
        .map(|ta| to.iter().map(|tb| normalized_tree_kernel(ta, tb)).fold(0.0, f64::max))
        .sum();
    total / from.len() as f64
}

/// Document-level syntactic similarity with an explicit provider.
pub fn syntactic_similarity_with(a: &str, b: &str, provider: &dyn SyntaxProvider) -> SyntaxScore {
    if a == b {
        return SyntaxScore { value: 1.0, fallback_used: false };
    }
    let (trees_a, fb_a) = parse_document(a, provider);
    let (trees_b, fb_b) = parse_document(b, provider);
    if trees_a.is_empty() || trees_b.is_empty() {
        return SyntaxScore { value: 0.0, fallback_used: fb_a || fb_b };
    }
    let value = 0.5 * (directional_mean(&trees_a, &trees_b) + directional_mean(&trees_b, &trees_a));
    SyntaxScore { value, fallback_used: fb_a || fb_b }
}

/// Document-level syntactic similarity with the default shallow parser.
pub fn syntactic_similarity(a: &str, b: &str) -> f64 {
    syntactic_similarity_with(a, b, &ShallowParser).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Brute-force fragment enumeration, used as the independent oracle for
    /// the recursive kernel. A fragment rooted at a phrasal node keeps that
    /// node's full child-label sequence; each phrasal child is either cut
    /// (left as a bare label) or expanded recursively, while POS children
    /// stay bare labels. The kernel value is the dot product of the two
    /// trees' fragment multisets.
    fn fragments_rooted(node: &Tree) -> Vec<String> {
        let mut child_options: Vec<Vec<String>> = Vec::new();
        for c in &node.children {
            let mut options = vec![c.label.clone()];
            if !c.is_leaf() && !is_preterminal(c) {
                options.extend(fragments_rooted(c));
            }
            child_options.push(options);
        }
        let mut combos = vec![String::new()];
        for options in child_options {
            let mut next = Vec::new();
            for prefix in &combos {
                for opt in &options {
                    next.push(format!("{prefix} ({opt})"));
                }
            }
            combos = next;
        }
        combos.into_iter().map(|c| format!("{}{}", node.label, c)).collect()
    }

    fn fragment_multiset(tree: &Tree) -> HashMap<String, usize> {
        let mut all = Vec::new();
        collect_phrasal(tree, &mut all);
        let mut counts = HashMap::new();
        for node in all {
            for f in fragments_rooted(node) {
                *counts.entry(f).or_insert(0) += 1;
            }
        }
        counts
    }

    fn kernel_oracle(a: &Tree, b: &Tree) -> f64 {
        let fa = fragment_multiset(a);
        let fb = fragment_multiset(b);
        fa.iter().map(|(f, ca)| ca * fb.get(f).copied().unwrap_or(0)).sum::<usize>() as f64
    }

    fn parse(sentence: &str) -> Tree {
        ShallowParser.parse(sentence).unwrap()
    }

    #[test]
    fn kernel_matches_brute_force_enumeration() {
        // Five pairs of small sentences; every tree stays at or under twelve
        // nodes so the enumeration is exact and fast.
        let pairs = [
            ("the cat sat", "the dog sat"),
            ("cats", "cats"),
            ("a big cat", "the big dog"),
            ("send the email", "send the letter"),
            ("the cat sat", "quickly run"),
        ];
        for (sa, sb) in pairs {
            let (ta, tb) = (parse(sa), parse(sb));
            assert!(ta.size() <= 12 && tb.size() <= 12, "{sa:?}/{sb:?} grew too big");
            let got = tree_kernel(&ta, &tb);
            let want = kernel_oracle(&ta, &tb);
            assert!(
                (got - want).abs() < 1e-9,
                "pair ({sa:?}, {sb:?}): kernel {got} vs oracle {want}"
            );
            // Self-kernels must agree too, which pins the normalization.
            assert!((tree_kernel(&ta, &ta) - kernel_oracle(&ta, &ta)).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_documents_score_one() {
        let doc = "Write the email today. Keep it short.";
        assert_eq!(syntactic_similarity(doc, doc), 1.0);
        // Also through the non-shortcut path: same parse, different object.
        let other = String::from(doc);
        assert!((syntactic_similarity(doc, &other) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_productions_score_zero() {
        // S(NP(NOUN)) shares no production with S(ADVP(ADV) VP(VERB)).
        assert_eq!(syntactic_similarity("cats", "quickly run"), 0.0);
    }

    #[test]
    fn word_substitution_is_invisible_but_shape_change_is_not() {
        let a = "the cat sat on the mat";
        let b = "the dog sat on the rug";
        let sim = syntactic_similarity(a, b);
        assert!((sim - 1.0).abs() < 1e-12, "structure-preserving substitution scored {sim}");
        let unrelated = syntactic_similarity(a, "quickly run");
        assert!(unrelated < sim);
        // Dropping the prepositional phrase changes the shape and the score.
        let shorter = syntactic_similarity(a, "the cat sat");
        assert!(shorter < 1.0 && shorter > 0.0, "shape change scored {shorter}");
    }

    #[test]
    fn empty_side_scores_zero() {
        assert_eq!(syntactic_similarity("", "the cat"), 0.0);
        assert_eq!(syntactic_similarity("the cat", ""), 0.0);
        assert_eq!(syntactic_similarity("", ""), 1.0); // byte-equal shortcut
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = "Book the flight to Paris. Pack light.";
        let b = "Send the invoice to the partner.";
        assert!((syntactic_similarity(a, b) - syntactic_similarity(b, a)).abs() < 1e-12);
    }

    #[test]
    fn failing_provider_falls_back_to_flat_pos() {
        struct Broken;
        impl SyntaxProvider for Broken {
            fn parse(&self, _: &str) -> Result<Tree, String> {
                Err("nope".to_string())
            }
        }
        // The flat fallback compares whole POS sequences, so matching
        // shapes still score and different shapes do not.
        let same_shape = syntactic_similarity_with("the cat", "the dog", &Broken);
        assert!(same_shape.fallback_used);
        assert!(same_shape.value > 0.0);
        let different_shape = syntactic_similarity_with("the cat", "run quickly", &Broken);
        assert!(different_shape.fallback_used);
        assert_eq!(different_shape.value, 0.0);
    }

    #[test]
    fn chunker_builds_expected_phrases() {
        let t = parse("the cat sat on the mat");
        assert_eq!(t.label, "S");
        let labels: Vec<&str> = t.children.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, vec!["NP", "VP", "PP"]);
    }
}
