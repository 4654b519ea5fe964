// Minimal read-only renderer used when the interactive form UI has not been
// built. Lists the topics of each question from the inline payload.
(function () {
  var app = document.getElementById("app");
  var node = document.getElementById("linkstudy-payload");
  var payload;
  try {
    payload = JSON.parse(node.textContent);
  } catch (err) {
    app.textContent = "Topic data could not be read: " + err;
    return;
  }
  payload.questions.forEach(function (q) {
    var section = document.createElement("section");
    var title = document.createElement("h2");
    title.textContent = q.question_id + ": " + q.question_text;
    section.appendChild(title);
    if (q.topics.length === 0) {
      var empty = document.createElement("p");
      empty.textContent = "No topics for this question.";
      section.appendChild(empty);
    }
    var list = document.createElement("ul");
    q.topics.forEach(function (t) {
      var item = document.createElement("li");
      item.textContent = t.label + " (" + t.keywords.join(", ") + ")";
      list.appendChild(item);
    });
    section.appendChild(list);
    app.appendChild(section);
  });
})();
