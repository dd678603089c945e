//! Prompt templates for the three judge tasks.

use std::collections::BTreeMap;

use super::JudgeError;

const EXTRACT_TEMPLATE: &str = r#"- Find every sentence containing object facts.
- Break sentences into atomic statements.
- Skip the sentences without statements.
- If there is no valid sentence, output "No statements".
- Do not output any explanation or other words.
- Strictly follow the output format shown in the example.

Here is an example:
# Response
It is difficult to say which game has been released in more versions without more information, so I can only guess based on my training data.
Arthur's Magazine was likely started first. It was possibly founded in 1923 by Arthur K. Watson, a prominent publisher in the field of men's magazines.
First for Women, on the other hand, was not founded until 1989. It was created as a spin-off of Family Circle magazine, which was founded in 1957.

# Statements
>> Sentence 1: Arthur's Magazine was likely started first.
* Arthur's Magazine was likely started first.
>> Sentence 2: It was possibly founded in 1923 by Arthur K. Watson, a prominent publisher in the field of men's magazines.
* Arthur's Magazine was possibly founded in 1923.
* Arthur's Magazine was founded by Arthur K. Watson.
* Arthur K. Watson is a prominent publisher in the field of men's magazines.
>> Sentence 3: First for Women, on the other hand, was not founded until 1989.
* First for Women was not founded until 1989.
>> Sentence 4: It was created as a spin-off of Family Circle magazine, which was founded in 1957.
* First for Women was created as a spin-off of Family Circle magazine.
* Family Circle magazine was founded in 1957.

And then comes your task:
# Response
{response}

# Statements"#;

const VERIFY_TEMPLATE: &str = r#"Choose from "Correct", "Vague" and "Wrong" for the verification of the statement.
- "Correct": The statement is supported by the materials.
- "Vague": Hard to determine the truthfulness of the statement based on the materials.
- "Wrong": The statement is negated by the materials.
Directly output the verification result without explanation.
Here is an example:

# Materials
- First for Women is a women's magazine published by Bauer Media Group in the USA. The magazine was started in 1989. It is based in Englewood Cliffs, New Jersey. In 2011 the circulation of the magazine was 1,310,696 copies.
- Arthur's Magazine (1844–1846) was an American literary periodical published in Philadelphia in the 19th century. Edited by T.S. Arthur, it featured work by Edgar A. Poe, J.H. Ingraham, Sarah Josepha Hale, Thomas G. Spear, and others. In May 1846 it was merged into "Godey's Lady's Book".
- The correct answer for the question "Which magazine was started first Arthur's Magazine or First for Women" may be "Arthur's Magazine".
# Statement
Arthur's Magazine was likely started first.
# Verification
Correct

And then comes your task:
# Materials
{materials}
# Statement
{statement}
# Verification"#;

const ASSESS_TEMPLATE: &str = r#"Evaluate the helpfulness of the statement:
- "5": The statement answer the question.
- "4": The statement provides crucial information.
- "3": The statement contains relevant facts.
- "2": The statement is about other supplementary facts.
- "1": The statement is useless or not relevant at all.
Directly output the evaluation result without explanation.

Here is an example:
# Question
Which magazine was started first Arthur's Magazine founded by Arthur K. Watson or First for Women?
# Response
It is difficult to say which game has been released in more versions without more information, so I can only guess based on my training data.
Arthur's Magazine was likely started first. It was possibly founded in 1923 by Arthur K. Watson, a prominent publisher in the field of men's magazines.
First for Women, on the other hand, was not founded until 1989. It was created as a spin-off of Family Circle magazine, which was founded in 1957.
# Statement
Arthur's Magazine was possibly founded in 1923.
# Evaluation
4

And then comes your task:
# Question
{question}
# Response
{response}
# Statement
{statement}
# Evaluation"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Extract,
    Verify,
    Assess,
}

impl Task {
    pub fn template(self) -> &'static str {
        match self {
            Task::Extract => EXTRACT_TEMPLATE,
            Task::Verify => VERIFY_TEMPLATE,
            Task::Assess => ASSESS_TEMPLATE,
        }
    }

    pub fn slots(self) -> &'static [&'static str] {
        match self {
            Task::Extract => &["response"],
            Task::Verify => &["materials", "statement"],
            Task::Assess => &["question", "response", "statement"],
        }
    }
}

/// Named values substituted into a template.
pub type Slots<'a> = BTreeMap<&'static str, &'a str>;

/// Instantiates the template for `task`. Every slot the task declares must be
/// present and non-blank.
pub fn render_prompt(task: Task, slots: &Slots<'_>) -> Result<String, JudgeError> {
    for &slot in task.slots() {
        if !slots.get(slot).is_some_and(|v| !v.trim().is_empty()) {
            return Err(JudgeError::MissingSlot(slot));
        }
    }
    // single pass, so placeholders inside slot values stay literal
    let template = task.template();
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').map(|close| (&after[..close], close)) {
            Some((name, close)) if task.slots().contains(&name) => {
                out.push_str(slots[name]);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

pub fn extraction_prompt(response: &str) -> Result<String, JudgeError> {
    render_prompt(Task::Extract, &Slots::from([("response", response)]))
}

pub fn verification_prompt(materials: &str, statement: &str) -> Result<String, JudgeError> {
    render_prompt(
        Task::Verify,
        &Slots::from([("materials", materials), ("statement", statement)]),
    )
}

pub fn assessment_prompt(question: &str, response: &str, statement: &str) -> Result<String, JudgeError> {
    render_prompt(
        Task::Assess,
        &Slots::from([("question", question), ("response", response), ("statement", statement)]),
    )
}

/// Formats retrieved passages as the bulleted materials block.
pub fn format_materials<'a>(passages: impl IntoIterator<Item = &'a str>) -> String {
    passages
        .into_iter()
        .map(|p| format!("- {}", p.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_contains_instruction_and_response() {
        let prompt = extraction_prompt("Arthur's Magazine was likely started first.").unwrap();
        assert!(prompt.lines().any(|l| l == "- Break sentences into atomic statements."));
        assert!(prompt.ends_with(
            "# Response\nArthur's Magazine was likely started first.\n\n# Statements"
        ));
        assert!(!prompt.contains("{response}"));
    }

    #[test]
    fn verify_requires_materials() {
        assert_eq!(
            verification_prompt("", "A statement."),
            Err(JudgeError::MissingSlot("materials"))
        );
        let mut slots = Slots::new();
        slots.insert("materials", "- x");
        assert_eq!(render_prompt(Task::Verify, &slots), Err(JudgeError::MissingSlot("statement")));
    }

    #[test]
    fn assess_ends_with_evaluation_heading() {
        let prompt = assessment_prompt("Q?", "R.", "S.").unwrap();
        assert!(prompt.ends_with("# Statement\nS.\n# Evaluation"));
        assert!(prompt.contains("# Question\nQ?\n# Response\nR.\n"));
    }

    #[test]
    fn slot_values_are_not_reexpanded() {
        // a response that itself contains a placeholder must be inserted verbatim
        let prompt = assessment_prompt("{response}", "R.", "S.").unwrap();
        assert!(prompt.contains("# Question\n{response}\n# Response\nR.\n"));
    }

    #[test]
    fn materials_are_bulleted() {
        assert_eq!(format_materials(["a ", "b"]), "- a\n- b");
    }

    #[test]
    fn templates_have_no_trailing_whitespace() {
        for task in [Task::Extract, Task::Verify, Task::Assess] {
            assert!(task.template().lines().all(|l| l == l.trim_end()));
        }
    }
}
