use std::fmt::Write as _;

use super::{CorpusError, SentenceAnnotation};

/// Reads CoNLL-U sentences, discarding sentence ids.
pub fn read_conllu(text: &str) -> Result<Vec<SentenceAnnotation>, CorpusError> {
    Ok(read_conllu_documents(text)?.into_iter().map(|(_, s)| s).collect())
}

/// Reads CoNLL-U sentences together with their `# sent_id` comment, if any.
///
/// Multiword range lines (`1-2`) and empty nodes (`1.1`) are skipped; the
/// enhanced dependency column is ignored.
pub fn read_conllu_documents(
    text: &str,
) -> Result<Vec<(Option<String>, SentenceAnnotation)>, CorpusError> {
    let mut out = Vec::new();
    let mut current = empty();
    let mut sent_id = None;
    let mut start_line = 1;

    let finish = |current: &mut SentenceAnnotation,
                  sent_id: &mut Option<String>,
                  start_line: usize,
                  out: &mut Vec<(Option<String>, SentenceAnnotation)>|
     -> Result<(), CorpusError> {
        if current.is_empty() {
            sent_id.take();
            return Ok(());
        }
        let s = std::mem::replace(current, empty());
        s.validate().map_err(|message| CorpusError::MalformedConllu {
            line: start_line,
            message,
        })?;
        out.push((sent_id.take(), s));
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut current, &mut sent_id, start_line, &mut out)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                let id = id.trim_start().trim_start_matches('=').trim();
                sent_id = Some(id.to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| CorpusError::MalformedConllu {
            line: line_no,
            message,
        };
        if cols.len() != 10 {
            return Err(bad(format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if current.is_empty() {
            start_line = line_no;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| bad(format!("bad token id `{}`", cols[0])))?;
        if id != current.len() + 1 {
            return Err(bad(format!("token id {id} out of sequence")));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| bad(format!("non-integer head `{}`", cols[6])))?;
        current.tokens.push(cols[1].to_string());
        current.lemmas.push(cols[2].to_string());
        current.upos.push(cols[3].to_string());
        current.heads.push(head);
        current.deprels.push(cols[7].to_string());
    }
    finish(&mut current, &mut sent_id, start_line, &mut out)?;
    Ok(out)
}

fn empty() -> SentenceAnnotation {
    SentenceAnnotation {
        tokens: Vec::new(),
        lemmas: Vec::new(),
        upos: Vec::new(),
        heads: Vec::new(),
        deprels: Vec::new(),
        alignments: Vec::new(),
    }
}

/// Writes the retained columns; the others are `_`.
pub fn write_conllu<'a, I>(sentences: I) -> String
where
    I: IntoIterator<Item = (Option<&'a str>, &'a SentenceAnnotation)>,
{
    let mut out = String::new();
    for (id, s) in sentences {
        if let Some(id) = id {
            let _ = writeln!(out, "# sent_id = {id}");
        }
        for i in 0..s.len() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                i + 1,
                s.tokens[i],
                s.lemmas[i],
                s.upos[i],
                s.heads[i],
                s.deprels[i]
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const IO_DORMO: &str = "# sent_id = it-1\n# text = Io dormo\n1\tIo\tio\tPRON\t_\t_\t2\tnsubj\t_\t_\n2\tdormo\tdormire\tVERB\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn two_token_sentence() {
        let docs = read_conllu_documents(IO_DORMO).unwrap();
        assert_eq!(docs.len(), 1);
        let (id, s) = &docs[0];
        assert_eq!(id.as_deref(), Some("it-1"));
        assert_eq!(s.len(), 2);
        assert_eq!(s.heads, vec![2, 0]);
        assert_eq!(s.deprels, vec!["nsubj", "root"]);
        assert_eq!(s.lemmas[1], "dormire");
    }

    #[test]
    fn empty_file() {
        assert!(read_conllu("").unwrap().is_empty());
        assert!(read_conllu("\n\n# comment\n").unwrap().is_empty());
    }

    #[test]
    fn non_integer_head() {
        let text = "1\tIo\tio\tPRON\t_\t_\tx\tnsubj\t_\t_\n";
        assert!(matches!(
            read_conllu(text),
            Err(CorpusError::MalformedConllu { line: 1, .. })
        ));
    }

    #[test]
    fn cyclic_tree() {
        let text = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(matches!(read_conllu(text), Err(CorpusError::MalformedConllu { .. })));
    }

    #[test]
    fn multiword_tokens_are_skipped() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdi\tdi\tADP\t_\t_\t3\tcase\t_\t_\n2\til\til\tDET\t_\t_\t3\tdet\t_\t_\n3\tgatto\tgatto\tNOUN\t_\t_\t0\troot\t_\t_\n2.1\tx\tx\tX\t_\t_\t_\t_\t0:root\t_\n";
        let s = read_conllu(text).unwrap();
        assert_eq!(s[0].tokens, vec!["di", "il", "gatto"]);
    }

    fn sentence() -> impl Strategy<Value = SentenceAnnotation> {
        (1usize..8)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec("[a-zà-ù]{1,6}", n),
                    proptest::collection::vec(prop_oneof!["NOUN", "VERB", "DET", "PRON"], n),
                    proptest::collection::vec(any::<prop::sample::Index>(), n),
                )
            })
            .prop_map(|(n, words, upos, picks)| {
                // Random tree: token i > 0 attaches to an earlier token, then shuffle ids.
                let mut heads = vec![0usize; n];
                for i in 1..n {
                    heads[i] = picks[i].index(i) + 1;
                }
                let deprels = (0..n)
                    .map(|i| if heads[i] == 0 { "root".to_string() } else { "dep".to_string() })
                    .collect();
                SentenceAnnotation {
                    lemmas: words.iter().map(|w| w.to_lowercase()).collect(),
                    tokens: words,
                    upos: upos.into_iter().collect(),
                    heads,
                    deprels,
                    alignments: vec![],
                }
            })
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(sents in proptest::collection::vec(sentence(), 0..4)) {
            let text = write_conllu(sents.iter().map(|s| (None, s)));
            prop_assert_eq!(read_conllu(&text).unwrap(), sents);
        }
    }
}
