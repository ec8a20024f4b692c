//! Low-resource document splits and a few-shot / zero-shot filter on a
//! synthetic corpus.

use evtgen::corpus::corpus_stats;
use evtgen::ontology::Ontology;
use evtgen::splitter::{eval_filter, few_shot_filter, make_split, FewShotConfig, SplitConfig, STANDARD_PROPORTIONS};
use evtgen::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> evtgen::Result<()> {
    let ace = Ontology::ace05();
    let corpus = synthetic_corpus(&ace, &SyntheticConfig { docs: 200, seed: 3, ..Default::default() });
    println!("{}", corpus_stats(&corpus));

    println!("{:>6} {:>6} {:>14} {:>14}", "p", "docs", "types greedy", "types random");
    for p in STANDARD_PROPORTIONS {
        let greedy = make_split(&corpus, &SplitConfig::new(p))?;
        let random = make_split(&corpus, &SplitConfig { coverage_greedy: false, seed: 3, ..SplitConfig::new(p) })?;
        println!(
            "{:>5.0}% {:>6} {:>14} {:>14}",
            p * 100.0,
            greedy.doc_ids.len(),
            greedy.covered_types(),
            random.covered_types()
        );
    }

    for k in [0, 2] {
        let fs = few_shot_filter(&corpus, &ace, &FewShotConfig { n_common: 10, k, seed: 0 });
        let eval = eval_filter(&corpus, &fs.unseen);
        println!(
            "\nk={k}: {} seen types, {} unseen; train keeps {} events, eval keeps {} events",
            fs.seen.len(),
            fs.unseen.len(),
            fs.train.event_count(),
            eval.event_count()
        );
    }
    Ok(())
}
