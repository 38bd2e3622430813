package tmpl;

import java.util.List;

public class FormFiller {
    private final ParameterSet parameters = new ParameterSet();

    public FormFiller(String... fields) {
        for (String field : fields) {
            parameters.declare(field);
        }
    }

    public void fill(String field, String value) {
        Binder.bind(parameters, field, value);
    }

    public int pendingFields() {
        List<Parameter> open = parameters.getAllParameters();
        return open.size();
    }

    public boolean isComplete() {
        return pendingFields() == 0;
    }
}
