//! Deterministic part-of-speech tagging.
//!
//! Noun extraction and shallow parsing both need POS tags without any model
//! download. The bundled [`RuleTagger`] combines a closed-class lexicon, a
//! modest open-class lexicon, capitalization cues, and suffix rules, with
//! "noun" as the fallback (unknown words in service inputs are almost always
//! product names and other nominals). Callers that have a stronger tagger can
//! plug it in through [`PosTagger`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Det,
    Pron,
    Prep,
    Conj,
    Verb,
    Adj,
    Adv,
    Num,
    Noun,
    Other,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Det => "DET",
            PosTag::Pron => "PRON",
            PosTag::Prep => "PREP",
            PosTag::Conj => "CONJ",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Num => "NUM",
            PosTag::Noun => "NOUN",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        Some(match s {
            "DET" => PosTag::Det,
            "PRON" => PosTag::Pron,
            "PREP" => PosTag::Prep,
            "CONJ" => PosTag::Conj,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "NUM" => PosTag::Num,
            "NOUN" => PosTag::Noun,
            "OTHER" => PosTag::Other,
            _ => return None,
        })
    }
}

/// Tags a token sequence. Implementations must be pure: same tokens, same
/// tags.
pub trait PosTagger {
    fn tag_tokens(&self, tokens: &[&str]) -> Vec<PosTag>;
}

// Possessives are listed as determiners because they slot into noun phrases
// the way articles do, which is what the chunker cares about.
const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any", "no",
    "all", "both", "either", "neither", "another", "my", "your", "his", "her", "its", "our",
    "their",
];

const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "them", "us", "who", "whom",
    "whose", "which", "what", "something", "anything", "everything", "nothing", "someone",
    "anyone", "everyone",
];

const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "from", "to", "of", "about", "over", "under",
    "between", "into", "through", "during", "against", "across", "after", "before", "around",
    "near", "behind", "along", "without", "within", "upon", "off", "per",
];

const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "because", "although", "though", "while", "if",
    "when", "unless", "since", "whereas",
];

const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "done",
    "have", "has", "had", "will", "would", "can", "could", "shall", "should", "may", "might",
    "must", "write", "writes", "wrote", "written", "create", "creates", "generate",
    "generates", "make", "makes", "made", "use", "uses", "keep", "keeps", "kept", "include",
    "includes", "start", "starts", "describe", "describes", "send", "sends", "sent", "sell",
    "sells", "sold", "buy", "buys", "bought", "visit", "visits", "play", "plays", "learn",
    "learns", "teach", "teaches", "taught", "help", "helps", "give", "gives", "gave", "take",
    "takes", "took", "get", "gets", "got", "go", "goes", "went", "come", "comes", "came",
    "run", "runs", "ran", "say", "says", "said", "see", "sees", "saw", "know", "knows",
    "knew", "think", "thinks", "thought", "look", "looks", "find", "finds", "found",
    "announce", "announces", "launch", "launches", "promote", "promotes", "introduce",
    "introduces", "recommend", "recommends", "explore", "explores", "enjoy", "enjoys",
    "organize", "organizes", "state", "states", "put", "puts", "bring", "brings", "offer",
    "offers", "need", "needs", "want", "wants", "sat", "sit", "sits",
];

const ADJECTIVES: &[&str] = &[
    "new", "good", "great", "best", "big", "small", "little", "long", "short", "high", "low",
    "formal", "casual", "colloquial", "attractive", "relevant", "detailed", "comprehensive",
    "professional", "potential", "fresh", "key", "intended", "clear", "engaging", "popular",
    "famous", "local", "digital", "social", "healthy", "tasty", "delicious", "cozy", "sunny",
    "modern", "classic", "vintage", "affordable", "premium", "free", "quick", "easy",
    "simple", "smart", "wireless", "portable", "durable", "stylish", "trendy", "warm",
    "cold", "bright", "quiet", "busy", "happy", "proper", "main", "several", "many", "few",
    "other", "own", "same", "next", "last", "first", "second", "third",
];

const ADVERBS: &[&str] = &[
    "very", "really", "quite", "always", "never", "also", "just", "only", "too", "more",
    "most", "well", "soon", "now", "today", "here", "there", "quickly", "slowly", "often",
    "usually", "together", "again", "already", "respectfully", "furthermore", "please",
    "exactly", "currently",
];

const COMMON_NOUNS: &[&str] = &[
    "phone", "watch", "laptop", "camera", "headphones", "earbuds", "speaker", "charger",
    "sale", "discount", "offer", "deal", "product", "brand", "store", "shop", "customer",
    "audience", "email", "letter", "message", "partner", "industry", "company", "business",
    "meeting", "agenda", "proposal", "invoice", "trip", "travel", "tour", "city", "beach",
    "mountain", "hotel", "flight", "itinerary", "guide", "festival", "concert", "song",
    "album", "playlist", "band", "artist", "music", "food", "recipe", "dish", "restaurant",
    "menu", "coffee", "tea", "game", "level", "player", "score", "workout", "exercise",
    "yoga", "diet", "health", "doctor", "idea", "tip", "list", "title", "tag", "tags",
    "heading", "headings", "bullet", "point", "points", "summary", "review", "article",
    "blog", "post", "content", "copy", "text", "word", "words", "sentence", "paragraph",
    "topic", "theme", "style", "tone", "structure", "purpose", "background", "vocabulary",
    "pattern", "patterns", "argument", "cat", "dog", "fox", "mat", "book", "home", "house",
    "work", "day", "week", "weekend", "year", "time", "people", "family", "friend",
    "friends", "kids", "children", "team", "plan", "launch", "event", "party", "gift",
    "price", "prices", "quality", "design", "feature", "features", "service", "services",
    "app", "website", "page", "link", "video", "photo", "image", "market", "campaign",
    "newsletter", "update", "announcement", "reader", "readers", "listener", "listeners",
    "traveler", "travelers", "shopper", "shoppers",
];

fn in_list(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

/// The bundled lexicon-and-suffix tagger.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleTagger;

impl RuleTagger {
    fn tag_one(&self, token: &str, position: usize) -> PosTag {
        if token.chars().all(|c| c.is_ascii_digit())
            || token.parse::<f64>().is_ok()
        {
            return PosTag::Num;
        }
        // Mid-sequence acronyms ("IT", "SEO") are nominal even when their
        // lowercase form is a function word.
        let alphabetic = token.chars().all(char::is_alphabetic);
        if position > 0 && alphabetic && token.len() >= 2 && token.chars().all(char::is_uppercase)
        {
            return PosTag::Noun;
        }
        let folded = token.to_lowercase();
        let w = folded.as_str();
        if in_list(DETERMINERS, w) {
            return PosTag::Det;
        }
        if in_list(PRONOUNS, w) {
            return PosTag::Pron;
        }
        if in_list(PREPOSITIONS, w) {
            return PosTag::Prep;
        }
        if in_list(CONJUNCTIONS, w) {
            return PosTag::Conj;
        }
        // Mid-sequence capitalized words are proper nouns.
        if position > 0 && alphabetic && token.chars().next().is_some_and(char::is_uppercase) {
            return PosTag::Noun;
        }
        if in_list(VERBS, w) {
            return PosTag::Verb;
        }
        if in_list(ADJECTIVES, w) {
            return PosTag::Adj;
        }
        if in_list(ADVERBS, w) {
            return PosTag::Adv;
        }
        if in_list(COMMON_NOUNS, w) {
            return PosTag::Noun;
        }
        for suffix in ["tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism"] {
            if w.len() > suffix.len() + 2 && w.ends_with(suffix) {
                return PosTag::Noun;
            }
        }
        for suffix in ["ous", "ful", "ive", "able", "ible", "ical", "ish", "less", "ary"] {
            if w.len() > suffix.len() + 2 && w.ends_with(suffix) {
                return PosTag::Adj;
            }
        }
        if w.len() > 4 && w.ends_with("ly") {
            return PosTag::Adv;
        }
        if w.len() > 5 && (w.ends_with("ing") || w.ends_with("ed")) {
            return PosTag::Verb;
        }
        PosTag::Noun
    }
}

impl PosTagger for RuleTagger {
    fn tag_tokens(&self, tokens: &[&str]) -> Vec<PosTag> {
        tokens.iter().enumerate().map(|(i, t)| self.tag_one(t, i)).collect()
    }
}
