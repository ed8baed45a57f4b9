use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Leave-one-category-out split: `train` holds every other category,
/// `test` only `held_out`.
pub fn make_zerogaze_split(ds: &Dataset, held_out: &str) -> Result<(Dataset, Dataset)> {
    if !ds.categories.contains(held_out) {
        return Err(Error::UnknownCategory(held_out.to_string()));
    }
    let (test, train): (Vec<_>, Vec<_>) = ds.samples.iter().cloned().partition(|s| s.task == held_out);
    if train.is_empty() {
        log::warn!("holding out {held_out:?} leaves an empty training split");
    }
    Ok((Dataset::from_scanpaths(train)?, Dataset::from_scanpaths(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fixation, Scanpath};

    fn path(task: &str, image: &str) -> Scanpath {
        Scanpath {
            image_id: image.into(),
            task: task.into(),
            subject: "1".into(),
            width: 100.0,
            height: 100.0,
            fixations: vec![Fixation { x: 1.0, y: 1.0, t: 100.0 }],
        }
    }

    #[test]
    fn eighteen_categories_hold_out_knife() {
        let cats: Vec<String> = (0..17).map(|i| format!("cat{i}")).chain(["knife".to_string()]).collect();
        let samples = cats.iter().enumerate().flat_map(|(i, c)| (0..3).map(move |k| path(c, &format!("{i}-{k}")))).collect();
        let ds = Dataset::from_scanpaths(samples).unwrap();
        assert_eq!(ds.categories.len(), 18);
        let (train, test) = make_zerogaze_split(&ds, "knife").unwrap();
        assert_eq!(train.categories.len(), 17);
        assert!(!train.categories.contains("knife"));
        assert!(test.samples.iter().all(|s| s.task == "knife"));
        assert_eq!(train.len() + test.len(), ds.len());
    }

    #[test]
    fn only_category_leaves_empty_train() {
        let ds = Dataset::from_scanpaths(vec![path("cup", "a"), path("cup", "b")]).unwrap();
        let (train, test) = make_zerogaze_split(&ds, "cup").unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 2);
    }

    #[test]
    fn unknown_category_errors() {
        let ds = Dataset::from_scanpaths(vec![path("cup", "a")]).unwrap();
        assert!(matches!(make_zerogaze_split(&ds, "fork"), Err(Error::UnknownCategory(_))));
    }
}
