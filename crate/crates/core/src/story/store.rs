use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FormatError, FormatMode, Project, Stakeholder, UserStory};
use crate::ids::{ProjectId, StoryId, UserId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoryError {
    #[error("unknown project {0}")]
    UnknownProject(ProjectId),
    #[error("unknown story {0}")]
    UnknownStory(StoryId),
    #[error("project {0} already exists")]
    DuplicateProject(ProjectId),
    #[error("story {0} already exists")]
    DuplicateStory(StoryId),
    #[error("user {user} is not a member of project {project}")]
    NotAMember { user: UserId, project: ProjectId },
    #[error("display name {name:?} is already taken in project {project}")]
    DuplicateDisplayName { project: ProjectId, name: String },
    #[error("project must have at least one member")]
    NoMembers,
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// In-memory story repository. Callers serialize mutations per project.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryStore {
    projects: BTreeMap<ProjectId, Project>,
    stakeholders: BTreeMap<UserId, Stakeholder>,
    stories: BTreeMap<StoryId, UserStory>,
}

impl StoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a project and its founding members. `project.member_ids` is
    /// ignored; membership comes from `founders`.
    pub fn create_project(&mut self, project: Project, founders: Vec<Stakeholder>) -> Result<(), StoryError> {
        if self.projects.contains_key(&project.id) {
            return Err(StoryError::DuplicateProject(project.id));
        }
        if founders.is_empty() {
            return Err(StoryError::NoMembers);
        }
        let id = project.id.clone();
        self.projects.insert(id.clone(), Project { member_ids: Default::default(), ..project });
        for founder in founders {
            if let Err(e) = self.join(&id, founder) {
                self.projects.remove(&id);
                return Err(e);
            }
        }
        Ok(())
    }

    /// Adds `stakeholder` to the project. Joining again with the same display
    /// name is a no-op.
    pub fn join(&mut self, project_id: &ProjectId, stakeholder: Stakeholder) -> Result<(), StoryError> {
        let project = self
            .projects
            .get(project_id)
            .ok_or_else(|| StoryError::UnknownProject(project_id.clone()))?;
        let clash = project.member_ids.iter().any(|m| {
            m != &stakeholder.id
                && self
                    .stakeholders
                    .get(m)
                    .is_some_and(|s| s.display_name == stakeholder.display_name)
        });
        if clash {
            return Err(StoryError::DuplicateDisplayName {
                project: project_id.clone(),
                name: stakeholder.display_name,
            });
        }
        let project = self.projects.get_mut(project_id).expect("checked above");
        project.member_ids.insert(stakeholder.id.clone());
        self.stakeholders.insert(stakeholder.id.clone(), stakeholder);
        Ok(())
    }

    pub fn project(&self, id: &ProjectId) -> Option<&Project> {
        self.projects.get(id)
    }

    pub fn projects(&self) -> impl Iterator<Item = &Project> {
        self.projects.values()
    }

    pub fn stakeholder(&self, id: &UserId) -> Option<&Stakeholder> {
        self.stakeholders.get(id)
    }

    pub fn is_member(&self, project_id: &ProjectId, user: &UserId) -> bool {
        self.projects
            .get(project_id)
            .is_some_and(|p| p.member_ids.contains(user))
    }

    pub fn require_member(&self, project_id: &ProjectId, user: &UserId) -> Result<&Project, StoryError> {
        let project = self
            .projects
            .get(project_id)
            .ok_or_else(|| StoryError::UnknownProject(project_id.clone()))?;
        if !project.member_ids.contains(user) {
            return Err(StoryError::NotAMember {
                user: user.clone(),
                project: project_id.clone(),
            });
        }
        Ok(project)
    }

    pub fn insert_story(&mut self, story: UserStory) -> Result<&UserStory, StoryError> {
        self.require_member(&story.project_id, &story.author_id)?;
        if self.stories.contains_key(&story.id) {
            return Err(StoryError::DuplicateStory(story.id));
        }
        let id = story.id.clone();
        self.stories.insert(id.clone(), story);
        Ok(&self.stories[&id])
    }

    pub fn edit_story(
        &mut self,
        id: &StoryId,
        text: &str,
        at: DateTime<Utc>,
        mode: FormatMode,
    ) -> Result<&UserStory, StoryError> {
        let story = self
            .stories
            .get_mut(id)
            .filter(|s| !s.deleted)
            .ok_or_else(|| StoryError::UnknownStory(id.clone()))?;
        story.retext(text, at, mode)?;
        Ok(story)
    }

    /// Soft delete: the story is kept but excluded from every default listing.
    pub fn delete_story(&mut self, id: &StoryId, at: DateTime<Utc>) -> Result<&UserStory, StoryError> {
        let story = self
            .stories
            .get_mut(id)
            .filter(|s| !s.deleted)
            .ok_or_else(|| StoryError::UnknownStory(id.clone()))?;
        story.deleted = true;
        story.updated_at = at;
        Ok(story)
    }

    /// Inserts or replaces `story` as is, without membership checks. Used
    /// when replaying a journal of already validated changes.
    pub fn put_story(&mut self, story: UserStory) {
        self.stories.insert(story.id.clone(), story);
    }

    pub fn story(&self, id: &StoryId) -> Option<&UserStory> {
        self.stories.get(id)
    }

    /// Stories of a project ordered by creation time, then id.
    pub fn stories(&self, project_id: &ProjectId, author: Option<&UserId>, include_deleted: bool) -> Vec<&UserStory> {
        let mut out: Vec<&UserStory> = self
            .stories
            .values()
            .filter(|s| &s.project_id == project_id)
            .filter(|s| author.is_none_or(|a| &s.author_id == a))
            .filter(|s| include_deleted || !s.deleted)
            .collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        out
    }
}
